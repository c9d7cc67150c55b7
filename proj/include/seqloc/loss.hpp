#pragma once

#include <optional>
#include <span>
#include <vector>

#include "seqloc/geometry.hpp"
#include "seqloc/linalg.hpp"

namespace seqloc {

struct LossWeights {
  double beta = 1.0;     // orientation scale
  double gamma = 2e-4;   // weight decay
  double delta = 2e-4;   // temporal regularization
  // Literal unsquared gamma*||theta|| instead of the default (gamma/2)*||theta||^2.
  bool unsquared_weight_decay = false;
  // Regularize the frame-to-frame change of the position *error* instead of
  // the predicted position itself.
  bool temporal_on_error = false;
};

struct LossBreakdown {
  double position_term = 0.0;
  double orientation_term = 0.0;
  double weight_decay_term = 0.0;
  double temporal_term = 0.0;
  double total = 0.0;
};

// Previous frame of the same sequence; absent exactly at t=0.
struct PrevFrame {
  Vec3 predicted_position;
  Vec3 truth_position;  // only read by the temporal_on_error variant
};

// Position and temporal terms are unsquared Euclidean norms; the orientation
// term compares the raw predicted quaternion against the normalized ground
// truth. params_norm_sq is the squared L2 norm of all weights (biases
// excluded).
LossBreakdown frame_loss(const PosePrediction& pred, const Pose& truth,
                         const std::optional<PrevFrame>& prev, const LossWeights& weights,
                         double params_norm_sq);

// Sum of frame losses; temporal terms link consecutive frames within the
// sequence only. Throws LengthMismatchError.
LossBreakdown sequence_loss(std::span<const PosePrediction> preds, std::span<const Pose> truths,
                            const LossWeights& weights, double params_norm_sq);

struct LossGradient {
  // dL/dP per frame, 7 components each (position, then quaternion w,x,y,z).
  std::vector<Vec> per_frame;
  // The weight-decay contribution is this coefficient times each weight.
  double weight_decay_coeff = 0.0;
};

// Exact subgradients of sequence_loss w.r.t. the predictions; the zero
// vector is used where a norm residual vanishes (guard 1e-12). The temporal
// term couples each position into the gradients of frames t and t+1.
LossGradient loss_gradient(std::span<const PosePrediction> preds, std::span<const Pose> truths,
                           const LossWeights& weights, double params_norm_sq);

// beta such that the position and orientation terms have equal magnitude on
// the sample: mean position term / mean orientation term at beta=1, clamped
// to [1, 2000]. Throws DegenerateOrientationTermError when the denominator
// is below 1e-12.
double balance_beta(std::span<const PosePrediction> preds, std::span<const Pose> truths);

}  // namespace seqloc
