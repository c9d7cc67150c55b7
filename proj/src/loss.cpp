#include "seqloc/loss.hpp"

#include <algorithm>
#include <cmath>

#include "seqloc/errors.hpp"

namespace seqloc {

namespace {

constexpr double kResidualGuard = 1e-12;

struct Quat4 {
  double v[4];
};

Quat4 quat_residual(const PosePrediction& pred, const Pose& truth) {
  const Quaternion qt = normalize(truth.orientation);
  const Quaternion& qp = pred.raw_orientation;
  return {{qp.w - qt.w, qp.x - qt.x, qp.y - qt.y, qp.z - qt.z}};
}

double norm4(const Quat4& q) {
  return std::sqrt(q.v[0] * q.v[0] + q.v[1] * q.v[1] + q.v[2] * q.v[2] + q.v[3] * q.v[3]);
}

Vec3 temporal_residual(const PosePrediction& pred, const Pose& truth, const PrevFrame& prev,
                       bool on_error) {
  if (on_error)
    return (pred.position - truth.position) - (prev.predicted_position - prev.truth_position);
  return pred.position - prev.predicted_position;
}

}  // namespace

LossBreakdown frame_loss(const PosePrediction& pred, const Pose& truth,
                         const std::optional<PrevFrame>& prev, const LossWeights& weights,
                         double params_norm_sq) {
  LossBreakdown out;
  out.position_term = norm(pred.position - truth.position);
  out.orientation_term = weights.beta * norm4(quat_residual(pred, truth));
  out.weight_decay_term = weights.unsquared_weight_decay
                              ? weights.gamma * std::sqrt(params_norm_sq)
                              : 0.5 * weights.gamma * params_norm_sq;
  out.temporal_term =
      prev ? weights.delta * norm(temporal_residual(pred, truth, *prev, weights.temporal_on_error))
           : 0.0;
  out.total = out.position_term + out.orientation_term + out.weight_decay_term + out.temporal_term;
  return out;
}

LossBreakdown sequence_loss(std::span<const PosePrediction> preds, std::span<const Pose> truths,
                            const LossWeights& weights, double params_norm_sq) {
  if (preds.size() != truths.size())
    throw LengthMismatchError("prediction and ground-truth counts differ");
  LossBreakdown sum;
  for (std::size_t t = 0; t < preds.size(); ++t) {
    std::optional<PrevFrame> prev;
    if (t > 0) prev = PrevFrame{preds[t - 1].position, truths[t - 1].position};
    const LossBreakdown frame = frame_loss(preds[t], truths[t], prev, weights, params_norm_sq);
    sum.position_term += frame.position_term;
    sum.orientation_term += frame.orientation_term;
    sum.weight_decay_term += frame.weight_decay_term;
    sum.temporal_term += frame.temporal_term;
    sum.total += frame.total;
  }
  return sum;
}

LossGradient loss_gradient(std::span<const PosePrediction> preds, std::span<const Pose> truths,
                           const LossWeights& weights, double params_norm_sq) {
  if (preds.size() != truths.size())
    throw LengthMismatchError("prediction and ground-truth counts differ");
  const std::size_t T = preds.size();
  LossGradient out;
  out.per_frame.assign(T, Vec(7, 0.0));

  for (std::size_t t = 0; t < T; ++t) {
    Vec& g = out.per_frame[t];

    const Vec3 rp = preds[t].position - truths[t].position;
    const double np = norm(rp);
    if (np > kResidualGuard) {
      g[0] += rp.x / np;
      g[1] += rp.y / np;
      g[2] += rp.z / np;
    }

    const Quat4 rq = quat_residual(preds[t], truths[t]);
    const double nq = norm4(rq);
    if (nq > kResidualGuard)
      for (int k = 0; k < 4; ++k) g[3 + k] += weights.beta * rq.v[k] / nq;

    if (t > 0) {
      const PrevFrame prev{preds[t - 1].position, truths[t - 1].position};
      const Vec3 rt = temporal_residual(preds[t], truths[t], prev, weights.temporal_on_error);
      const double nt = norm(rt);
      if (nt > kResidualGuard) {
        const Vec3 u = (weights.delta / nt) * rt;
        Vec& gp = out.per_frame[t - 1];
        g[0] += u.x;
        g[1] += u.y;
        g[2] += u.z;
        gp[0] -= u.x;
        gp[1] -= u.y;
        gp[2] -= u.z;
      }
    }
  }

  if (weights.unsquared_weight_decay) {
    const double n = std::sqrt(params_norm_sq);
    out.weight_decay_coeff = n > kResidualGuard ? T * weights.gamma / n : 0.0;
  } else {
    out.weight_decay_coeff = T * weights.gamma;
  }
  return out;
}

double balance_beta(std::span<const PosePrediction> preds, std::span<const Pose> truths) {
  if (preds.size() != truths.size())
    throw LengthMismatchError("prediction and ground-truth counts differ");
  if (preds.empty()) throw EmptyListError("balance_beta requires at least one frame");
  double pos_sum = 0.0;
  double orient_sum = 0.0;
  for (std::size_t t = 0; t < preds.size(); ++t) {
    pos_sum += norm(preds[t].position - truths[t].position);
    orient_sum += norm4(quat_residual(preds[t], truths[t]));
  }
  const double n = static_cast<double>(preds.size());
  if (orient_sum / n < 1e-12)
    throw DegenerateOrientationTermError("orientation term vanishes on the sample");
  return std::clamp((pos_sum / n) / (orient_sum / n), 1.0, 2000.0);
}

}  // namespace seqloc
