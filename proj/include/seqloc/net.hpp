#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "seqloc/geometry.hpp"
#include "seqloc/linalg.hpp"
#include "seqloc/rng.hpp"

namespace seqloc {

inline constexpr int kPoseDim = 7;  // 0-2 position, 3-6 quaternion (w,x,y,z)

struct LstmOptions {
  // Peephole terms are kept by default; the reduced cell without them is
  // available for ablation.
  bool peepholes = true;
  // The output gate reads c_{t-1} by default. Setting this moves the output
  // peephole onto the freshly computed c_t (the Gers-Schmidhuber form).
  bool output_peephole_current_cell = false;
};

struct LstmParams {
  int input_dim = 0;
  int hidden_dim = 0;
  Matrix W_xi, W_xf, W_xo, W_xc;  // H x D
  Matrix W_hi, W_hf, W_ho, W_hc;  // H x H
  Vec w_ci, w_cf, w_co;           // H, elementwise peepholes
  Vec b_i, b_f, b_o, b_c;         // H

  LstmParams() = default;
  LstmParams(int input_dim, int hidden_dim);
};

struct RegressorParams {
  Matrix W;  // kPoseDim x H
  Vec b;     // kPoseDim

  RegressorParams() = default;
  explicit RegressorParams(int hidden_dim);
};

struct LstmState {
  Vec h, c;

  LstmState() = default;
  explicit LstmState(int hidden_dim) : h(hidden_dim, 0.0), c(hidden_dim, 0.0) {}
};

struct GateTrace {
  std::vector<Vec> input_gate, forget_gate, output_gate;  // per timestep, H each
};

// Everything the backward pass needs from one timestep.
struct StepCache {
  Vec x;       // input
  Vec h_prev;  // previous hidden
  Vec c_prev;  // previous cell
  Vec i, f, o; // gate activations
  Vec g;       // tanh(cell candidate)
  Vec c, h;    // new cell / hidden
};

struct ForwardCache {
  LstmOptions options;
  std::vector<StepCache> steps;
  // Inverted-dropout masks applied to each h_t before the regressor; entries
  // are 0 or 1/(1-p). Empty means eval mode (identity).
  std::vector<Vec> dropout_masks;
};

// One application of the gate equations. `cache` and `trace` are optional.
LstmState lstm_step(const LstmParams& params, const LstmOptions& options, const Vec& x,
                    const LstmState& prev, StepCache* cache = nullptr,
                    GateTrace* trace = nullptr);

// Sequential fold of lstm_step over the inputs, starting from `init`.
std::vector<LstmState> lstm_forward(const LstmParams& params, const LstmOptions& options,
                                    std::span<const Vec> xs, const LstmState& init,
                                    ForwardCache* cache = nullptr, GateTrace* trace = nullptr);

enum class DropoutMode { Train, Eval };

// Inverted dropout: train mode zeroes entries with probability p and scales
// survivors by 1/(1-p); eval mode is the identity.
Vec dropout(const Vec& h, double p, DropoutMode mode, Rng& rng);

// The mask form used by training so the backward pass can reuse it.
Vec dropout_mask(int hidden_dim, double p, Rng& rng);

PosePrediction regress(const RegressorParams& params, const Vec& h);

// Shape mirror of the parameters; also reused for the Adam moment buffers.
struct Gradients {
  LstmParams lstm;
  RegressorParams reg;

  Gradients() = default;
  Gradients(int input_dim, int hidden_dim) : lstm(input_dim, hidden_dim), reg(hidden_dim) {}
};

struct Model {
  LstmParams lstm;
  RegressorParams reg;
  LstmOptions options;
};

// Per-sequence training forward: zero initial state, dropout on each h_t
// (masks recorded in the cache), regression per frame.
struct SequenceForward {
  ForwardCache cache;
  std::vector<PosePrediction> predictions;
  GateTrace gates;
};

// dropout_rng == nullptr runs eval mode (no masks, identity).
SequenceForward forward_sequence(const Model& model, std::span<const Vec> xs, double dropout_p,
                                 Rng* dropout_rng);

// Same forward but with externally supplied masks (empty = eval mode), so a
// finite-difference probe can re-run the pass with the masks held fixed.
SequenceForward forward_sequence_with_masks(const Model& model, std::span<const Vec> xs,
                                            const std::vector<Vec>& masks);

// Exact gradients of the sequence loss w.r.t. every LSTM and regressor
// parameter given dL/dP per frame; reuses the dropout masks recorded in the
// cache. Throws CacheMismatchError when the cache and gradient list disagree.
Gradients backward(const Model& model, const ForwardCache& cache,
                   const std::vector<Vec>& dLoss_dPose);

// Xavier-uniform weights, zero biases.
LstmParams init_lstm(Rng& rng, int input_dim, int hidden_dim);

// Gaussian rows: position rows (0-2) with sigma_pos, orientation rows (3-6)
// with sigma_orient; zero bias.
RegressorParams init_regressor(Rng& rng, int hidden_dim, double sigma_pos, double sigma_orient);

// Flat views over all parameter buffers in the documented checkpoint order:
// W_xi, W_xf, W_xo, W_xc, W_hi, W_hf, W_ho, W_hc, w_ci, w_cf, w_co,
// b_i, b_f, b_o, b_c, regressor W, regressor b.
std::vector<std::span<double>> param_spans(LstmParams& lstm, RegressorParams& reg);
std::vector<std::span<const double>> param_spans(const LstmParams& lstm,
                                                 const RegressorParams& reg);
// Same order with the bias vectors (b_i..b_c, regressor b) excluded.
std::vector<std::span<double>> weight_spans(LstmParams& lstm, RegressorParams& reg);
std::vector<std::span<const double>> weight_spans(const LstmParams& lstm,
                                                  const RegressorParams& reg);

// Sum of squares over weight spans (biases excluded from decay).
double weight_norm_sq(const Model& model);

}  // namespace seqloc
