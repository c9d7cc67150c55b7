#pragma once

#include <string>

#include "seqloc/geometry.hpp"

namespace seqloc {

enum class CameraModel { Perspective, FisheyeEquidistant };

std::string to_string(CameraModel model);
CameraModel camera_model_from_string(const std::string& name);

struct CameraIntrinsics {
  CameraModel model = CameraModel::Perspective;
  double fov_deg = 90.0;  // horizontal field of view
  int width = 640;
  int height = 480;
  double cx = 320.0;
  double cy = 240.0;
};

// Principal point is fixed at the image center. Throws ConfigError when the
// field of view is outside the model's admissible range (perspective needs
// fov < 180, fisheye allows up to 180).
CameraIntrinsics make_intrinsics(CameraModel model, double fov_deg, int width, int height);

// Focal length in pixels such that the horizontal FoV spans the image width:
// perspective f = (w/2)/tan(fov/2), equidistant fisheye f = (w/2)/(fov/2).
double focal_from_fov(const CameraIntrinsics& intr);

struct Projection {
  double u = 0.0;
  double v = 0.0;
  bool in_frame = false;
  bool in_valid_region = false;  // inside the circular mask of radius min(w,h)/2
};

// Camera looks down +z. Perspective throws BehindCameraError for z <= 0;
// both models throw DegeneratePointError for points at the origin.
// in_frame uses the half-open pixel convention [0,w) x [0,h); fisheye
// additionally requires theta <= fov/2. in_valid_region restricts in_frame to
// the circular region that survives the corner fill.
Projection project(const CameraIntrinsics& intr, const Vec3& point_cam);

// Inverse rigid transform R(q)^T (p - t); pose orientation must be unit.
Vec3 world_to_camera(const Pose& pose, const Vec3& point_world);

}  // namespace seqloc
