#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqloc/checkpoint.hpp"
#include "seqloc/exec.hpp"
#include "seqloc/loss.hpp"
#include "seqloc/net.hpp"
#include "seqloc/optim.hpp"
#include "seqloc/synthdata.hpp"

namespace seqloc {

struct TrainConfig {
  int T = 3;
  int batch_sequences = 20;
  double dropout_p = 0.5;
  double gamma = 2e-4;
  double delta = 2e-4;
  double beta = 1.0;
  bool beta_auto = true;  // JSON "beta": "auto" or a number
  double sigma_pos = 0.5;
  double sigma_orient = 0.01;
  int hidden = 128;
  int epochs = 0;  // required in config files; no paper-derived default exists
  std::uint64_t seed = 0;
  bool peepholes = true;
  bool output_peephole_current_cell = false;
  bool unsquared_weight_decay = false;
  bool temporal_on_error = false;
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

// Strict parse: unknown keys and a missing "epochs" are ConfigErrors.
TrainConfig train_config_from_json_file(const std::filesystem::path& path);
TrainConfig train_config_from_json_text(const std::string& text);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossBreakdown> log;  // batch-mean breakdown per optimizer step
};

// Mini-batch training: per epoch the training sequences are reshuffled, each
// sequence runs forward from a zero LSTM state with fresh dropout masks, and
// one Adam step applies the batch-mean gradient. Fully deterministic in
// config.seed for either exec mode. Throws ConfigMismatchError when the
// dataset was windowed with a different T and NonFiniteLossError when a
// batch loss stops being finite.
TrainResult train(const TrainConfig& config, const Dataset& dataset,
                  ExecMode mode = ExecMode::Parallel);

// Gradient of the batch-mean sequence loss (weight decay included), plus the
// batch-mean loss breakdown. Parallel and serial modes are bit-identical:
// sequences land in private slots and are reduced in index order.
struct BatchGradients {
  Gradients grads;
  LossBreakdown mean_loss;
};
BatchGradients batch_gradients(const Model& model, const Dataset& dataset,
                               std::span<const int> sequence_starts, int T, double dropout_p,
                               const LossWeights& weights, std::uint64_t dropout_seed,
                               ExecMode mode);

struct PathRow {
  int frame = 0;
  Pose truth;
  Vec3 predicted_position;
  Quaternion predicted_orientation;  // normalized; zero quaternion if degenerate
};

struct GateRow {
  int frame = 0;
  double median_input = 0.0;
  double median_forget = 0.0;
  double median_output = 0.0;
};

struct EvalReport {
  double median_position_m = 0.0;
  double median_orientation_deg = 0.0;
  int n_frames = 0;
  int T = 1;
  std::vector<PathRow> path;
  std::vector<GateRow> gates;
};

// Eval-mode forward over the split's sequences (dropout off, zero state per
// window). Predicted quaternions are normalized before the angular error; a
// zero-norm prediction scores 180 degrees instead of failing.
EvalReport evaluate(const Model& model, const Dataset& dataset, Split split,
                    ExecMode mode = ExecMode::Parallel);

// Mean within-sequence frame-to-frame jump of the predicted positions,
// the quantity the temporal regularizer acts on.
double mean_position_jump(const EvalReport& report);

void write_train_log(const std::filesystem::path& path, const std::vector<LossBreakdown>& log);

// Writes eval_report.json, path.csv, gates.csv and path.svg into out_dir.
void write_eval_outputs(const std::filesystem::path& out_dir, const EvalReport& report);

// Top-down plot of ground truth (red) and prediction (blue) with grey
// markers at sequence starts. Byte-deterministic for identical reports.
std::string emit_path_svg(const EvalReport& report);

struct SweepRow {
  int T = 0;
  double median_position_m = 0.0;
  double median_orientation_deg = 0.0;
  int n_frames = 0;
};

// Regenerates the dataset from the same recipe per T (same scene and
// trajectory, different windowing), trains with identical seeds, evaluates
// on the test split.
std::vector<SweepRow> sweep_t(const GenConfig& gen, const TrainConfig& base,
                              std::span<const int> t_values, ExecMode mode = ExecMode::Parallel);
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

struct FovVariantResult {
  double median_position_m = 0.0;
  double median_orientation_deg = 0.0;
};

struct FovRow {
  std::string optic;
  double fov_deg = 0.0;
  FovVariantResult single_frame;  // T=1 baseline
  FovVariantResult lstm;          // sequence model, delta = 0
  FovVariantResult lstm_reg;      // sequence model, temporal regularization on
};

// Renders the same scene and trajectory once per optic and trains the three
// variants per optic with identical seeds.
std::vector<FovRow> compare_fov(const GenConfig& base_gen, const TrainConfig& base_train,
                                std::span<const std::pair<CameraModel, double>> fov_specs,
                                ExecMode mode = ExecMode::Parallel);
void write_fov_csv(const std::filesystem::path& path, const std::vector<FovRow>& rows);

}  // namespace seqloc
