#include "seqloc/synthdata.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "seqloc/errors.hpp"
#include "seqloc/rng.hpp"

namespace seqloc {

namespace {

constexpr double kDegToRad = 0.017453292519943295769236907684886;

// Fixed mount rotating the camera frame (x right, y down, z optical axis)
// onto a level forward view along world +x with world +z up. Composing a yaw
// about world z in front of it turns the camera toward any planar heading.
constexpr Quaternion kLevelMount{0.5, -0.5, 0.5, -0.5};

Quaternion yaw_quaternion(double yaw_rad) {
  return {std::cos(0.5 * yaw_rad), 0.0, 0.0, std::sin(0.5 * yaw_rad)};
}

void subtract_mean(Vec& v) {
  double sum = 0.0;
  for (double e : v) sum += e;
  const double mean = sum / static_cast<double>(v.size());
  for (double& e : v) e -= mean;
}

Vec noisy_histogram(const Scene& scene, const Pose& pose, const CameraIntrinsics& intr,
                    int feature_dim, const FeatureGrid& grid, double noise_sigma,
                    std::uint64_t noise_seed, int frame_index) {
  Vec hist = render_histogram(scene, pose, intr, feature_dim, grid);
  if (noise_sigma > 0.0) {
    Rng rng(Rng::derive(noise_seed, static_cast<std::uint64_t>(frame_index)));
    for (double& e : hist) e += rng.normal(0.0, noise_sigma);
  }
  subtract_mean(hist);
  return hist;
}

std::string fmt_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

nlohmann::json intrinsics_to_json(const CameraIntrinsics& intr) {
  return {{"model", to_string(intr.model)}, {"fov_deg", intr.fov_deg}, {"width", intr.width},
          {"height", intr.height},          {"cx", intr.cx},           {"cy", intr.cy}};
}

CameraIntrinsics intrinsics_from_json(const nlohmann::json& j) {
  CameraIntrinsics intr = make_intrinsics(camera_model_from_string(j.at("model")),
                                          j.at("fov_deg"), j.at("width"), j.at("height"));
  intr.cx = j.at("cx");
  intr.cy = j.at("cy");
  return intr;
}

nlohmann::json gen_config_to_json(const GenConfig& g) {
  return {{"seed", g.seed},
          {"n_landmarks", g.n_landmarks},
          {"n_bins", g.n_bins},
          {"extent_m", g.extent_m},
          {"n_frames", g.n_frames},
          {"camera_height_m", g.camera_height_m},
          {"max_step_m", g.max_step_m},
          {"max_turn_deg", g.max_turn_deg},
          {"frame_rate_hz", g.frame_rate_hz},
          {"model", to_string(g.model)},
          {"fov_deg", g.fov_deg},
          {"width", g.width},
          {"height", g.height},
          {"split_ratio", g.split_ratio},
          {"T", g.T},
          {"feature_dim", g.feature_dim},
          {"cells_x", g.cells_x},
          {"cells_y", g.cells_y},
          {"feature_noise", g.feature_noise}};
}

GenConfig gen_config_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known = {
      "seed",       "n_landmarks",     "n_bins",     "extent_m",     "n_frames",
      "camera_height_m", "max_step_m", "max_turn_deg", "frame_rate_hz", "model",
      "fov_deg",    "width",           "height",     "split_ratio",  "T",
      "feature_dim", "cells_x",        "cells_y",    "feature_noise"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown dataset config key: " + key);

  GenConfig g;
  if (j.contains("seed")) g.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("n_landmarks")) g.n_landmarks = j.at("n_landmarks");
  if (j.contains("n_bins")) g.n_bins = j.at("n_bins");
  if (j.contains("extent_m")) g.extent_m = j.at("extent_m");
  if (j.contains("n_frames")) g.n_frames = j.at("n_frames");
  if (j.contains("camera_height_m")) g.camera_height_m = j.at("camera_height_m");
  if (j.contains("max_step_m")) g.max_step_m = j.at("max_step_m");
  if (j.contains("max_turn_deg")) g.max_turn_deg = j.at("max_turn_deg");
  if (j.contains("frame_rate_hz")) g.frame_rate_hz = j.at("frame_rate_hz");
  if (j.contains("model")) g.model = camera_model_from_string(j.at("model"));
  if (j.contains("fov_deg")) g.fov_deg = j.at("fov_deg");
  if (j.contains("width")) g.width = j.at("width");
  if (j.contains("height")) g.height = j.at("height");
  if (j.contains("split_ratio")) g.split_ratio = j.at("split_ratio");
  if (j.contains("T")) g.T = j.at("T");
  if (j.contains("feature_dim")) g.feature_dim = j.at("feature_dim");
  if (j.contains("cells_x")) g.cells_x = j.at("cells_x");
  if (j.contains("cells_y")) g.cells_y = j.at("cells_y");
  if (j.contains("feature_noise")) g.feature_noise = j.at("feature_noise");
  return g;
}

}  // namespace

std::vector<int> Dataset::sequence_starts(Split split) const {
  const std::vector<int>& frames = split_frames(split);
  std::vector<int> starts;
  for (std::size_t k = 0; k + manifest.T <= frames.size(); k += manifest.T)
    starts.push_back(frames[k]);
  return starts;
}

Scene generate_scene(std::uint64_t seed, int n_landmarks, double extent_m, int n_bins) {
  if (n_landmarks < 1) throw ConfigError("scene needs at least one landmark");
  Rng rng(seed);
  Scene scene;
  scene.rng_seed = seed;
  scene.landmarks.reserve(n_landmarks);
  const double half = extent_m / 2.0;
  for (int i = 0; i < n_landmarks; ++i) {
    Landmark lm;
    lm.position = {rng.uniform(-half, half), rng.uniform(-half, half), rng.uniform(-half, half)};
    lm.descriptor_id = rng.uniform_int(n_bins);
    scene.landmarks.push_back(lm);
  }
  return scene;
}

Trajectory generate_trajectory(std::uint64_t seed, int n_frames, double camera_height_m,
                               double max_step_m, double max_turn_deg) {
  if (n_frames < 1) throw ConfigError("trajectory needs at least one frame");
  Rng rng(seed);
  Trajectory traj;
  traj.camera_height_m = camera_height_m;
  traj.poses.reserve(n_frames);

  double yaw = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
  Vec3 pos{0.0, 0.0, camera_height_m};
  for (int t = 0; t < n_frames; ++t) {
    if (t > 0) {
      yaw += rng.uniform(-max_turn_deg, max_turn_deg) * kDegToRad;
      const double step = max_step_m * rng.uniform(0.5, 1.0);
      pos = pos + step * Vec3{std::cos(yaw), std::sin(yaw), 0.0};
    }
    Pose pose;
    pose.position = pos;
    pose.orientation = normalize(multiply(yaw_quaternion(yaw), kLevelMount));
    traj.poses.push_back(pose);
  }
  return traj;
}

Vec render_histogram(const Scene& scene, const Pose& pose, const CameraIntrinsics& intr,
                     int feature_dim, const FeatureGrid& grid) {
  const int n_cells = grid.cells_x * grid.cells_y;
  if (feature_dim < n_cells * grid.n_bins)
    throw DimensionMismatchError("feature_dim smaller than cells * bins");

  Vec hist(feature_dim, 0.0);
  const double cell_w = static_cast<double>(intr.width) / grid.cells_x;
  const double cell_h = static_cast<double>(intr.height) / grid.cells_y;
  for (const Landmark& lm : scene.landmarks) {
    const Vec3 pc = world_to_camera(pose, lm.position);
    if (norm(pc) <= 1e-9) continue;
    if (intr.model == CameraModel::Perspective && pc.z <= 0.0) continue;
    const Projection proj = project(intr, pc);
    if (!proj.in_valid_region) continue;
    const int cx = std::min(grid.cells_x - 1, static_cast<int>(proj.u / cell_w));
    const int cy = std::min(grid.cells_y - 1, static_cast<int>(proj.v / cell_h));
    const int bin = (cy * grid.cells_x + cx) * grid.n_bins + lm.descriptor_id;
    hist[bin] += 1.0;
  }
  return hist;
}

FrameFeatures render_features(const Scene& scene, const Pose& pose, const CameraIntrinsics& intr,
                              int feature_dim, const FeatureGrid& grid) {
  FrameFeatures out;
  out.features = render_histogram(scene, pose, intr, feature_dim, grid);
  subtract_mean(out.features);
  out.pose = pose;
  return out;
}

std::vector<Vec> render_all_features(const Scene& scene, const std::vector<Pose>& poses,
                                     const CameraIntrinsics& intr, int feature_dim,
                                     const FeatureGrid& grid, double noise_sigma,
                                     std::uint64_t noise_seed, ExecMode mode) {
  const int n = static_cast<int>(poses.size());
  std::vector<Vec> rows(n);
  if (mode == ExecMode::Parallel) {
    // Each frame writes only its own slot, so the output is identical to the
    // serial loop for any thread count.
    #pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < n; ++k)
      rows[k] = noisy_histogram(scene, poses[k], intr, feature_dim, grid, noise_sigma,
                                noise_seed, k);
  } else {
    for (int k = 0; k < n; ++k)
      rows[k] = noisy_histogram(scene, poses[k], intr, feature_dim, grid, noise_sigma,
                                noise_seed, k);
  }
  return rows;
}

Dataset build_dataset(const Scene& scene, const Trajectory& trajectory,
                      const CameraIntrinsics& intr, double split_ratio, int T, int feature_dim,
                      const FeatureGrid& grid, double noise_sigma, std::uint64_t noise_seed,
                      ExecMode mode) {
  const int n = static_cast<int>(trajectory.poses.size());
  if (T < 1) throw ConfigError("sequence length must be positive");
  if (split_ratio < 0.0 || split_ratio > 1.0) throw ConfigError("split_ratio must lie in [0, 1]");
  if (n < 2 * T) throw TooFewFramesError("trajectory shorter than two sequence windows");

  Dataset ds;
  ds.poses = trajectory.poses;
  ds.features =
      render_all_features(scene, trajectory.poses, intr, feature_dim, grid, noise_sigma,
                          noise_seed, mode);

  const int n_train_frames = static_cast<int>(std::floor(split_ratio * n));
  const int n_train_seq = n_train_frames / T;
  const int n_test_seq = (n - n_train_frames) / T;
  for (int i = 0; i < n_train_seq * T; ++i) ds.manifest.train_frames.push_back(i);
  for (int i = 0; i < n_test_seq * T; ++i) ds.manifest.test_frames.push_back(n_train_frames + i);

  ds.manifest.intrinsics = intr;
  ds.manifest.T = T;
  ds.manifest.feature_dim = feature_dim;
  ds.manifest.gen.split_ratio = split_ratio;
  ds.manifest.gen.T = T;
  ds.manifest.gen.feature_dim = feature_dim;
  ds.manifest.gen.n_frames = n;
  ds.manifest.gen.camera_height_m = trajectory.camera_height_m;
  ds.manifest.gen.frame_rate_hz = trajectory.frame_rate_hz;
  ds.manifest.gen.model = intr.model;
  ds.manifest.gen.fov_deg = intr.fov_deg;
  ds.manifest.gen.width = intr.width;
  ds.manifest.gen.height = intr.height;
  ds.manifest.gen.n_bins = grid.n_bins;
  ds.manifest.gen.cells_x = grid.cells_x;
  ds.manifest.gen.cells_y = grid.cells_y;
  ds.manifest.gen.feature_noise = noise_sigma;
  return ds;
}

Dataset generate_dataset(const GenConfig& config, ExecMode mode) {
  const Scene scene =
      generate_scene(Rng::derive(config.seed, 1), config.n_landmarks, config.extent_m,
                     config.n_bins);
  const Trajectory traj =
      generate_trajectory(Rng::derive(config.seed, 2), config.n_frames, config.camera_height_m,
                          config.max_step_m, config.max_turn_deg);
  const CameraIntrinsics intr =
      make_intrinsics(config.model, config.fov_deg, config.width, config.height);
  const FeatureGrid grid{config.cells_x, config.cells_y, config.n_bins};
  Dataset ds = build_dataset(scene, traj, intr, config.split_ratio, config.T, config.feature_dim,
                             grid, config.feature_noise, Rng::derive(config.seed, 3), mode);
  ds.manifest.gen = config;
  return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  nlohmann::json manifest;
  manifest["intrinsics"] = intrinsics_to_json(dataset.manifest.intrinsics);
  manifest["gen"] = gen_config_to_json(dataset.manifest.gen);
  manifest["split"] = {{"train_frames", dataset.manifest.train_frames},
                       {"test_frames", dataset.manifest.test_frames}};
  manifest["T"] = dataset.manifest.T;
  manifest["feature_dim"] = dataset.manifest.feature_dim;
  manifest["n_frames"] = dataset.poses.size();
  {
    std::ofstream os(dir / "manifest.json");
    if (!os) throw IoError("cannot write manifest.json");
    os << manifest.dump(2) << "\n";
  }

  {
    std::ofstream os(dir / "poses.csv");
    if (!os) throw IoError("cannot write poses.csv");
    os << "frame,px,py,pz,qw,qx,qy,qz\n";
    for (std::size_t i = 0; i < dataset.poses.size(); ++i) {
      const Pose& p = dataset.poses[i];
      os << i << ',' << fmt_g9(p.position.x) << ',' << fmt_g9(p.position.y) << ','
         << fmt_g9(p.position.z) << ',' << fmt_g9(p.orientation.w) << ','
         << fmt_g9(p.orientation.x) << ',' << fmt_g9(p.orientation.y) << ','
         << fmt_g9(p.orientation.z) << "\n";
    }
  }

  {
    static_assert(std::endian::native == std::endian::little);
    std::ofstream os(dir / "features.bin", std::ios::binary);
    if (!os) throw IoError("cannot write features.bin");
    std::vector<float> row(dataset.manifest.feature_dim);
    for (const Vec& features : dataset.features) {
      for (std::size_t j = 0; j < features.size(); ++j) row[j] = static_cast<float>(features[j]);
      os.write(reinterpret_cast<const char*>(row.data()),
               static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
  }
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;

  nlohmann::json manifest;
  {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw IoError("cannot read manifest.json in " + dir.string());
    is >> manifest;
  }
  ds.manifest.intrinsics = intrinsics_from_json(manifest.at("intrinsics"));
  ds.manifest.gen = gen_config_from_json(manifest.at("gen"));
  ds.manifest.train_frames = manifest.at("split").at("train_frames").get<std::vector<int>>();
  ds.manifest.test_frames = manifest.at("split").at("test_frames").get<std::vector<int>>();
  ds.manifest.T = manifest.at("T");
  ds.manifest.feature_dim = manifest.at("feature_dim");
  const std::size_t n_frames = manifest.at("n_frames");

  {
    std::ifstream is(dir / "poses.csv");
    if (!is) throw IoError("cannot read poses.csv in " + dir.string());
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string field;
      std::vector<double> vals;
      std::getline(ss, field, ',');  // frame index
      while (std::getline(ss, field, ',')) vals.push_back(std::strtod(field.c_str(), nullptr));
      if (vals.size() != 7) throw IoError("malformed poses.csv row");
      Pose p;
      p.position = {vals[0], vals[1], vals[2]};
      p.orientation = normalize(Quaternion{vals[3], vals[4], vals[5], vals[6]});
      ds.poses.push_back(p);
    }
  }
  if (ds.poses.size() != n_frames) throw IoError("poses.csv row count does not match manifest");

  {
    std::ifstream is(dir / "features.bin", std::ios::binary);
    if (!is) throw IoError("cannot read features.bin in " + dir.string());
    const int dim = ds.manifest.feature_dim;
    std::vector<float> row(dim);
    ds.features.reserve(n_frames);
    for (std::size_t k = 0; k < n_frames; ++k) {
      is.read(reinterpret_cast<char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
      if (!is) throw IoError("features.bin truncated");
      Vec f(dim);
      for (int j = 0; j < dim; ++j) f[j] = static_cast<double>(row[j]);
      ds.features.push_back(std::move(f));
    }
    char probe;
    if (is.read(&probe, 1)) throw IoError("features.bin larger than manifest frame count");
  }
  return ds;
}

GenConfig gen_config_from_json_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config: " + path.string());
  nlohmann::json j;
  is >> j;
  return gen_config_from_json(j);
}

GenConfig gen_config_from_json_text(const std::string& text) {
  return gen_config_from_json(nlohmann::json::parse(text));
}

}  // namespace seqloc
