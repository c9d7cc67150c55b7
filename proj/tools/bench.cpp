// Wall-clock comparison of the OpenMP kernels against their serial reference
// implementations (feature rendering across frames and batch gradients across
// sequences), with a bit-identity check between the two paths.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include <omp.h>

#include "seqloc/rng.hpp"
#include "seqloc/trainer.hpp"

using namespace seqloc;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool identical(const Gradients& a, const Gradients& b) {
  auto sa = param_spans(a.lstm, a.reg);
  auto sb = param_spans(b.lstm, b.reg);
  for (std::size_t s = 0; s < sa.size(); ++s)
    for (std::size_t k = 0; k < sa[s].size(); ++k)
      if (sa[s][k] != sb[s][k]) return false;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  int n_landmarks = argc > 1 ? std::atoi(argv[1]) : 20000;
  int n_frames = argc > 2 ? std::atoi(argv[2]) : 240;
  int hidden = argc > 3 ? std::atoi(argv[3]) : 128;
  int reps = argc > 4 ? std::atoi(argv[4]) : 3;

  std::printf("threads=%d landmarks=%d frames=%d hidden=%d reps=%d\n", omp_get_max_threads(),
              n_landmarks, n_frames, hidden, reps);

  GenConfig gen;
  gen.seed = 7;
  gen.n_landmarks = n_landmarks;
  gen.n_frames = n_frames;
  gen.extent_m = 200.0;

  const Scene scene = generate_scene(Rng::derive(gen.seed, 1), gen.n_landmarks, gen.extent_m,
                                     gen.n_bins);
  const Trajectory traj = generate_trajectory(Rng::derive(gen.seed, 2), gen.n_frames,
                                              gen.camera_height_m, gen.max_step_m,
                                              gen.max_turn_deg);
  const CameraIntrinsics intr =
      make_intrinsics(CameraModel::FisheyeEquidistant, 130.0, 640, 480);
  const FeatureGrid grid{gen.cells_x, gen.cells_y, gen.n_bins};

  // feature rendering across frames
  double t_serial = 0.0, t_parallel = 0.0;
  std::vector<Vec> rows_serial, rows_parallel;
  for (int r = 0; r < reps; ++r) {
    auto t0 = Clock::now();
    rows_serial = render_all_features(scene, traj.poses, intr, gen.feature_dim, grid, 0.0, 0,
                                      ExecMode::Serial);
    t_serial += seconds_since(t0);
    t0 = Clock::now();
    rows_parallel = render_all_features(scene, traj.poses, intr, gen.feature_dim, grid, 0.0, 0,
                                        ExecMode::Parallel);
    t_parallel += seconds_since(t0);
  }
  const bool render_match = rows_serial == rows_parallel;
  std::printf("render_features  serial %8.3f ms   openmp %8.3f ms   speedup %.2fx   %s\n",
              1e3 * t_serial / reps, 1e3 * t_parallel / reps, t_serial / t_parallel,
              render_match ? "bit-identical" : "MISMATCH");

  // batch gradients across sequences
  const Dataset ds = generate_dataset(gen);
  Rng rng(11);
  Model model;
  model.lstm = init_lstm(rng, gen.feature_dim, hidden);
  model.reg = init_regressor(rng, hidden, 0.5, 0.01);
  LossWeights weights;
  weights.beta = 100.0;
  const std::vector<int> starts = ds.sequence_starts(Split::Train);

  double g_serial = 0.0, g_parallel = 0.0;
  BatchGradients bg_serial, bg_parallel;
  for (int r = 0; r < reps; ++r) {
    auto t0 = Clock::now();
    bg_serial = batch_gradients(model, ds, starts, gen.T, 0.5, weights, 99, ExecMode::Serial);
    g_serial += seconds_since(t0);
    t0 = Clock::now();
    bg_parallel =
        batch_gradients(model, ds, starts, gen.T, 0.5, weights, 99, ExecMode::Parallel);
    g_parallel += seconds_since(t0);
  }
  const bool grads_match = identical(bg_serial.grads, bg_parallel.grads);
  std::printf("batch_gradients  serial %8.3f ms   openmp %8.3f ms   speedup %.2fx   %s\n",
              1e3 * g_serial / reps, 1e3 * g_parallel / reps, g_serial / g_parallel,
              grads_match ? "bit-identical" : "MISMATCH");

  return render_match && grads_match ? 0 : 1;
}
