#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "seqloc/camera.hpp"
#include "seqloc/exec.hpp"
#include "seqloc/geometry.hpp"
#include "seqloc/linalg.hpp"

namespace seqloc {

struct Landmark {
  Vec3 position;
  int descriptor_id = 0;  // in [0, n_bins)
};

struct Scene {
  std::vector<Landmark> landmarks;
  std::uint64_t rng_seed = 0;
};

struct Trajectory {
  std::vector<Pose> poses;
  double frame_rate_hz = 10.0;
  double camera_height_m = 1.6;
};

struct FrameFeatures {
  Vec features;  // mean-subtracted visibility histogram, length feature_dim
  Pose pose;
};

// Spatial layout of the visibility histogram: the image is divided into
// cells_x * cells_y cells and each validly projected landmark increments the
// (cell, descriptor) bin.
struct FeatureGrid {
  int cells_x = 4;
  int cells_y = 2;
  int n_bins = 8;
};

// Full recipe for a synthetic dataset; the scene, trajectory and noise
// streams are derived deterministically from `seed`.
struct GenConfig {
  std::uint64_t seed = 1;
  int n_landmarks = 400;
  int n_bins = 8;
  double extent_m = 200.0;
  int n_frames = 60;
  double camera_height_m = 1.6;
  double max_step_m = 0.2;
  double max_turn_deg = 10.0;
  double frame_rate_hz = 10.0;
  CameraModel model = CameraModel::Perspective;
  double fov_deg = 90.0;
  int width = 640;
  int height = 480;
  double split_ratio = 0.8;
  int T = 3;
  int feature_dim = 64;
  int cells_x = 4;
  int cells_y = 2;
  double feature_noise = 0.0;  // Gaussian sigma added to the histogram pre-subtraction
};

struct DatasetManifest {
  CameraIntrinsics intrinsics;
  GenConfig gen;
  std::vector<int> train_frames;  // frame indices, length a multiple of T
  std::vector<int> test_frames;
  int T = 3;
  int feature_dim = 64;
};

enum class Split { Train, Test };

struct Dataset {
  DatasetManifest manifest;
  std::vector<Pose> poses;   // ground truth per frame, unit orientations
  std::vector<Vec> features; // per frame, feature_dim doubles

  const std::vector<int>& split_frames(Split split) const {
    return split == Split::Train ? manifest.train_frames : manifest.test_frames;
  }
  // First frame index of each non-overlapping T-window in the split.
  std::vector<int> sequence_starts(Split split) const;
};

// Landmarks uniform in the axis-aligned box [-extent/2, extent/2]^3 with
// descriptor ids uniform in [0, n_bins). Deterministic in the seed.
Scene generate_scene(std::uint64_t seed, int n_landmarks, double extent_m, int n_bins);

// Smooth planar random walk at fixed height: per-frame heading change within
// +-max_turn_deg and step length within (0, max_step_m]. Orientations are
// yaw-only: a rotation about the world vertical composed with the fixed
// level mount that puts the optical axis in the ground plane, so the camera
// faces the heading.
Trajectory generate_trajectory(std::uint64_t seed, int n_frames, double camera_height_m,
                               double max_step_m, double max_turn_deg);

// Pre-subtraction visibility histogram, zero-padded to feature_dim. Throws
// DimensionMismatchError when feature_dim < cells_x*cells_y*n_bins.
Vec render_histogram(const Scene& scene, const Pose& pose, const CameraIntrinsics& intr,
                     int feature_dim, const FeatureGrid& grid);

// Histogram with its per-frame mean subtracted.
FrameFeatures render_features(const Scene& scene, const Pose& pose, const CameraIntrinsics& intr,
                              int feature_dim, const FeatureGrid& grid);

// Feature rows for every pose, optionally with per-entry Gaussian noise
// (added before the mean subtraction; the per-frame stream is derived from
// noise_seed and the frame index, so results do not depend on render order).
std::vector<Vec> render_all_features(const Scene& scene, const std::vector<Pose>& poses,
                                     const CameraIntrinsics& intr, int feature_dim,
                                     const FeatureGrid& grid, double noise_sigma,
                                     std::uint64_t noise_seed, ExecMode mode);

// Windows the trajectory into non-overlapping T-sequences with a contiguous
// train-prefix / test-suffix split (train gets floor(split_ratio * n) frames,
// each split drops its trailing remainder). Throws TooFewFramesError when
// the trajectory is shorter than 2T.
Dataset build_dataset(const Scene& scene, const Trajectory& trajectory,
                      const CameraIntrinsics& intr, double split_ratio, int T, int feature_dim,
                      const FeatureGrid& grid, double noise_sigma, std::uint64_t noise_seed,
                      ExecMode mode = ExecMode::Parallel);

// Scene + trajectory + build_dataset from one recipe.
Dataset generate_dataset(const GenConfig& config, ExecMode mode = ExecMode::Parallel);

// Directory layout: manifest.json, poses.csv (frame,px,py,pz,qw,qx,qy,qz with
// 9 significant digits), features.bin (little-endian float32, frame-major).
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

// JSON round-trip for GenConfig; unknown keys are rejected.
GenConfig gen_config_from_json_file(const std::filesystem::path& path);
GenConfig gen_config_from_json_text(const std::string& text);

}  // namespace seqloc
