#include "seqloc/camera.hpp"

#include <algorithm>
#include <cmath>

#include "seqloc/errors.hpp"

namespace seqloc {

namespace {
constexpr double kDegToRad = 0.017453292519943295769236907684886;
constexpr double kDegeneratePoint = 1e-9;
}  // namespace

std::string to_string(CameraModel model) {
  return model == CameraModel::Perspective ? "perspective" : "fisheye_equidistant";
}

CameraModel camera_model_from_string(const std::string& name) {
  if (name == "perspective") return CameraModel::Perspective;
  if (name == "fisheye_equidistant" || name == "fisheye") return CameraModel::FisheyeEquidistant;
  throw ConfigError("unknown camera model: " + name);
}

CameraIntrinsics make_intrinsics(CameraModel model, double fov_deg, int width, int height) {
  if (width <= 0 || height <= 0) throw ConfigError("image dimensions must be positive");
  const double upper = model == CameraModel::Perspective ? 180.0 : 180.0 + 1e-12;
  const bool ok = model == CameraModel::Perspective ? (fov_deg > 0.0 && fov_deg < upper)
                                                    : (fov_deg > 0.0 && fov_deg <= 180.0);
  if (!ok) throw ConfigError("field of view out of range for camera model");
  CameraIntrinsics intr;
  intr.model = model;
  intr.fov_deg = fov_deg;
  intr.width = width;
  intr.height = height;
  intr.cx = width / 2.0;
  intr.cy = height / 2.0;
  return intr;
}

double focal_from_fov(const CameraIntrinsics& intr) {
  const double half_fov = 0.5 * intr.fov_deg * kDegToRad;
  const double half_width = intr.width / 2.0;
  if (intr.model == CameraModel::Perspective) return half_width / std::tan(half_fov);
  return half_width / half_fov;
}

Projection project(const CameraIntrinsics& intr, const Vec3& p) {
  const double r3 = norm(p);
  if (r3 <= kDegeneratePoint) throw DegeneratePointError("projection of point at camera origin");

  const double f = focal_from_fov(intr);
  Projection out;
  bool within_fov = true;

  if (intr.model == CameraModel::Perspective) {
    if (p.z <= 0.0) throw BehindCameraError("perspective projection of point with z <= 0");
    out.u = intr.cx + f * p.x / p.z;
    out.v = intr.cy + f * p.y / p.z;
  } else {
    const double theta = std::acos(std::clamp(p.z / r3, -1.0, 1.0));
    const double radial = f * theta;
    const double rxy = std::hypot(p.x, p.y);
    if (rxy > 0.0) {
      out.u = intr.cx + radial * p.x / rxy;
      out.v = intr.cy + radial * p.y / rxy;
    } else {
      // On-axis (or exactly behind): image-plane direction is undefined,
      // radius is 0 forward and meaningless backward.
      out.u = intr.cx;
      out.v = intr.cy;
    }
    within_fov = theta <= 0.5 * intr.fov_deg * kDegToRad;
  }

  out.in_frame = within_fov && out.u >= 0.0 && out.u < intr.width && out.v >= 0.0 &&
                 out.v < intr.height;
  const double r_px = std::hypot(out.u - intr.cx, out.v - intr.cy);
  out.in_valid_region = out.in_frame && r_px <= std::min(intr.width, intr.height) / 2.0;
  return out;
}

Vec3 world_to_camera(const Pose& pose, const Vec3& point_world) {
  // R(q)^T (p - t) == rotate by the conjugate.
  return rotate(conjugate(pose.orientation), point_world - pose.position);
}

}  // namespace seqloc
