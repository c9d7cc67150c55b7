#include <doctest.h>

#include <cmath>

#include "seqloc/camera.hpp"
#include "seqloc/errors.hpp"
#include "seqloc/rng.hpp"

using namespace seqloc;

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec3 direction_at(double theta, double phi) {
  // theta off the optical axis, phi the image-plane azimuth
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

}  // namespace

TEST_CASE("focal length from field of view") {
  const auto persp90 = make_intrinsics(CameraModel::Perspective, 90.0, 640, 480);
  CHECK(focal_from_fov(persp90) == doctest::Approx(320.0).epsilon(1e-12));

  const auto fish180 = make_intrinsics(CameraModel::FisheyeEquidistant, 180.0, 640, 480);
  CHECK(focal_from_fov(fish180) == doctest::Approx(320.0 / (kPi / 2.0)).epsilon(1e-12));

  const auto persp60 = make_intrinsics(CameraModel::Perspective, 60.0, 640, 480);
  CHECK(focal_from_fov(persp60) == doctest::Approx(320.0 * std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("intrinsics validation") {
  CHECK_THROWS_AS(make_intrinsics(CameraModel::Perspective, 180.0, 640, 480), ConfigError);
  CHECK_THROWS_AS(make_intrinsics(CameraModel::Perspective, 0.0, 640, 480), ConfigError);
  CHECK_THROWS_AS(make_intrinsics(CameraModel::FisheyeEquidistant, 181.0, 640, 480), ConfigError);
  CHECK_NOTHROW(make_intrinsics(CameraModel::FisheyeEquidistant, 180.0, 640, 480));
  const auto intr = make_intrinsics(CameraModel::Perspective, 90.0, 640, 480);
  CHECK(intr.cx == 320.0);
  CHECK(intr.cy == 240.0);
}

TEST_CASE("on-axis point lands on the principal point for both models") {
  for (double fov : {60.0, 90.0, 130.0, 180.0}) {
    if (fov < 180.0) {
      const auto persp = make_intrinsics(CameraModel::Perspective, fov, 640, 480);
      const Projection p = project(persp, {0, 0, 5});
      CHECK(p.u == doctest::Approx(320.0));
      CHECK(p.v == doctest::Approx(240.0));
      CHECK(p.in_frame);
      CHECK(p.in_valid_region);
    }
    const auto fish = make_intrinsics(CameraModel::FisheyeEquidistant, fov, 640, 480);
    const Projection q = project(fish, {0, 0, 5});
    CHECK(q.u == doctest::Approx(320.0));
    CHECK(q.v == doctest::Approx(240.0));
    CHECK(q.in_frame);
  }
}

TEST_CASE("fisheye boundary uses the half-open pixel convention") {
  const auto fish = make_intrinsics(CameraModel::FisheyeEquidistant, 130.0, 640, 480);
  const double theta = 65.0 * kPi / 180.0;  // exactly fov/2, +x direction
  const Projection p = project(fish, direction_at(theta, 0.0));
  CHECK(p.u == doctest::Approx(640.0).epsilon(1e-12));
  CHECK_FALSE(p.in_frame);  // u == width falls outside [0, width)
}

TEST_CASE("point behind a 180 degree fisheye is out of view") {
  const auto fish = make_intrinsics(CameraModel::FisheyeEquidistant, 180.0, 640, 480);
  const Projection p = project(fish, {0, 0, -1});
  CHECK_FALSE(p.in_frame);
  CHECK_FALSE(p.in_valid_region);
}

TEST_CASE("projection error cases") {
  const auto persp = make_intrinsics(CameraModel::Perspective, 90.0, 640, 480);
  CHECK_THROWS_AS(project(persp, {0, 0, -1}), BehindCameraError);
  CHECK_THROWS_AS(project(persp, {1, 0, 0}), BehindCameraError);
  CHECK_THROWS_AS(project(persp, {0, 0, 0}), DegeneratePointError);
  const auto fish = make_intrinsics(CameraModel::FisheyeEquidistant, 180.0, 640, 480);
  CHECK_THROWS_AS(project(fish, {1e-10, 0, 0}), DegeneratePointError);
}

TEST_CASE("equidistant radius is linear in theta") {
  const auto fish = make_intrinsics(CameraModel::FisheyeEquidistant, 180.0, 640, 480);
  for (double theta : {0.05, 0.1, 0.2, 0.4}) {
    const Projection a = project(fish, direction_at(theta, 0.3));
    const Projection b = project(fish, direction_at(2.0 * theta, 0.3));
    const double ra = std::hypot(a.u - 320.0, a.v - 240.0);
    const double rb = std::hypot(b.u - 320.0, b.v - 240.0);
    CHECK(rb == doctest::Approx(2.0 * ra).epsilon(1e-9));
  }
}

TEST_CASE("valid region implies in frame and matches the circular mask") {
  const auto fish = make_intrinsics(CameraModel::FisheyeEquidistant, 180.0, 640, 480);
  Rng rng(23);
  for (int k = 0; k < 500; ++k) {
    const Vec3 p{rng.normal(), rng.normal(), rng.normal()};
    if (norm(p) < 1e-6) continue;
    const Projection proj = project(fish, p);
    if (proj.in_valid_region) CHECK(proj.in_frame);
    if (proj.in_frame) {
      const double r = std::hypot(proj.u - 320.0, proj.v - 240.0);
      CHECK(proj.in_valid_region == (r <= 240.0));
    }
  }
}

TEST_CASE("in-frame count is monotone in fisheye FoV over random scenes") {
  Rng rng(29);
  for (int scene = 0; scene < 100; ++scene) {
    // random landmark cloud and a random pose
    std::vector<Vec3> cloud;
    for (int i = 0; i < 60; ++i)
      cloud.push_back({rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)});
    Pose pose;
    pose.position = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    pose.orientation =
        normalize(Quaternion{rng.normal(), rng.normal(), rng.normal(), rng.normal()});

    int prev_count = -1;
    for (double fov : {90.0, 130.0, 180.0}) {
      const auto intr = make_intrinsics(CameraModel::FisheyeEquidistant, fov, 640, 480);
      int count = 0;
      for (const Vec3& lm : cloud) {
        const Vec3 pc = world_to_camera(pose, lm);
        if (norm(pc) <= 1e-9) continue;
        if (project(intr, pc).in_frame) ++count;
      }
      CHECK(count >= prev_count);
      prev_count = count;
    }
  }
}

TEST_CASE("world_to_camera basics") {
  Pose identity;
  const Vec3 p = world_to_camera(identity, {1, 2, 3});
  CHECK(p.x == doctest::Approx(1.0));
  CHECK(p.y == doctest::Approx(2.0));
  CHECK(p.z == doctest::Approx(3.0));

  Pose shifted;
  shifted.position = {1, 0, 0};
  const Vec3 q = world_to_camera(shifted, {1, 0, 0});
  CHECK(norm(q) == doctest::Approx(0.0));
}

TEST_CASE("world_to_camera for 180 degree yaw matches the sandwich-product oracle") {
  Pose pose;
  pose.orientation = {0, 0, 1, 0};  // 180 degrees about y
  const Vec3 cam = world_to_camera(pose, {0, 0, 1});
  // brute-force conjugate sandwich q* v q expanded by hand
  const Quaternion qc = conjugate(pose.orientation);
  const Quaternion prod =
      multiply(multiply(qc, Quaternion{0, 0, 0, 1}), conjugate(qc));
  CHECK(cam.x == doctest::Approx(prod.x).epsilon(1e-12));
  CHECK(cam.y == doctest::Approx(prod.y).epsilon(1e-12));
  CHECK(cam.z == doctest::Approx(prod.z).epsilon(1e-12));
  CHECK(cam.z == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("world_to_camera round trip is identity") {
  Rng rng(31);
  for (int k = 0; k < 100; ++k) {
    Pose pose;
    pose.position = {rng.normal(), rng.normal(), rng.normal()};
    pose.orientation =
        normalize(Quaternion{rng.normal(), rng.normal(), rng.normal(), rng.normal()});
    const Vec3 world{rng.normal(), rng.normal(), rng.normal()};
    const Vec3 cam = world_to_camera(pose, world);
    const Vec3 back = rotate(pose.orientation, cam) + pose.position;
    CHECK(norm(back - world) <= 1e-9);
  }
}
