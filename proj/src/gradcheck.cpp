#include "seqloc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "seqloc/loss.hpp"
#include "seqloc/net.hpp"
#include "seqloc/rng.hpp"

namespace seqloc {

namespace {

constexpr double kEps = 1e-5;
constexpr double kTolerance = 1e-4;

struct Instance {
  Model model;
  std::vector<Vec> xs;
  std::vector<Pose> truths;
  std::vector<Vec> masks;  // empty = no dropout
  LossWeights weights;
};

Quaternion random_unit_quaternion(Rng& rng) {
  Quaternion q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
  return normalize(q);
}

double total_loss(const Instance& inst) {
  const SequenceForward fwd = forward_sequence_with_masks(inst.model, inst.xs, inst.masks);
  const double wnorm = weight_norm_sq(inst.model);
  return sequence_loss(fwd.predictions, inst.truths, inst.weights, wnorm).total;
}

// The unsquared norms in the loss are non-smooth at zero residual; reject
// instances whose residuals sit too close to those kinks for a clean
// finite-difference probe.
bool residuals_well_separated(const Instance& inst) {
  const SequenceForward fwd = forward_sequence_with_masks(inst.model, inst.xs, inst.masks);
  for (std::size_t t = 0; t < fwd.predictions.size(); ++t) {
    const PosePrediction& p = fwd.predictions[t];
    if (norm(p.position - inst.truths[t].position) < 1e-3) return false;
    const Quaternion qt = inst.truths[t].orientation;
    const Quaternion& qp = p.raw_orientation;
    const double dq = std::sqrt((qp.w - qt.w) * (qp.w - qt.w) + (qp.x - qt.x) * (qp.x - qt.x) +
                                (qp.y - qt.y) * (qp.y - qt.y) + (qp.z - qt.z) * (qp.z - qt.z));
    if (dq < 1e-3) return false;
    if (t > 0) {
      Vec3 rt = p.position - fwd.predictions[t - 1].position;
      if (inst.weights.temporal_on_error)
        rt = (p.position - inst.truths[t].position) -
             (fwd.predictions[t - 1].position - inst.truths[t - 1].position);
      if (inst.weights.delta > 0.0 && norm(rt) < 1e-3) return false;
    }
  }
  return true;
}

Instance make_instance(Rng& rng, int trial) {
  for (int attempt = 0;; ++attempt) {
    Instance inst;
    const int D = 1 + rng.uniform_int(6);
    const int H = 1 + rng.uniform_int(8);
    const int T = 1 + rng.uniform_int(4);

    inst.model.options.peepholes = trial % 5 != 4;
    inst.model.options.output_peephole_current_cell = trial % 4 == 3;
    inst.model.lstm = init_lstm(rng, D, H);
    inst.model.reg = init_regressor(rng, H, 0.6, 0.4);
    // Randomize biases too so their gradient paths are exercised.
    for (int j = 0; j < H; ++j) {
      inst.model.lstm.b_i[j] = rng.uniform(-0.4, 0.4);
      inst.model.lstm.b_f[j] = rng.uniform(-0.4, 0.4);
      inst.model.lstm.b_o[j] = rng.uniform(-0.4, 0.4);
      inst.model.lstm.b_c[j] = rng.uniform(-0.4, 0.4);
    }
    for (int k = 0; k < kPoseDim; ++k) inst.model.reg.b[k] = rng.uniform(-0.5, 0.5);

    for (int t = 0; t < T; ++t) {
      Vec x(D);
      for (double& e : x) e = rng.uniform(-1.0, 1.0);
      inst.xs.push_back(std::move(x));
      Pose truth;
      truth.position = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
      truth.orientation = random_unit_quaternion(rng);
      inst.truths.push_back(truth);
    }

    inst.weights.beta = rng.uniform(0.5, 2.0);
    inst.weights.gamma = trial % 7 == 6 ? 0.0 : rng.uniform(1e-4, 2e-3);
    inst.weights.delta = trial % 6 == 5 ? 0.0 : rng.uniform(0.05, 0.2);
    inst.weights.unsquared_weight_decay = trial % 8 == 7;
    inst.weights.temporal_on_error = trial % 9 == 8;

    if (trial % 2 == 1) {
      inst.masks.resize(T);
      for (int t = 0; t < T; ++t) inst.masks[t] = dropout_mask(H, 0.3, rng);
    }

    if (residuals_well_separated(inst) || attempt > 50) return inst;
  }
}

}  // namespace

GradCheckResult run_gradcheck(int trials, std::ostream& os, std::uint64_t seed) {
  Rng rng(seed);
  GradCheckResult result;
  result.trials = trials;

  for (int trial = 0; trial < trials; ++trial) {
    Instance inst = make_instance(rng, trial);

    // Analytic gradient: BPTT plus the weight-decay coefficient.
    const SequenceForward fwd = forward_sequence_with_masks(inst.model, inst.xs, inst.masks);
    const double wnorm = weight_norm_sq(inst.model);
    const LossGradient lg = loss_gradient(fwd.predictions, inst.truths, inst.weights, wnorm);
    Gradients analytic = backward(inst.model, fwd.cache, lg.per_frame);
    if (lg.weight_decay_coeff != 0.0) {
      auto gw = weight_spans(analytic.lstm, analytic.reg);
      auto pw = weight_spans(inst.model.lstm, inst.model.reg);
      for (std::size_t s = 0; s < gw.size(); ++s)
        for (std::size_t k = 0; k < gw[s].size(); ++k)
          gw[s][k] += lg.weight_decay_coeff * pw[s][k];
    }

    auto analytic_spans = param_spans(analytic.lstm, analytic.reg);
    auto model_spans = param_spans(inst.model.lstm, inst.model.reg);

    double trial_max = 0.0;
    for (std::size_t s = 0; s < model_spans.size(); ++s) {
      for (std::size_t k = 0; k < model_spans[s].size(); ++k) {
        const double saved = model_spans[s][k];
        model_spans[s][k] = saved + kEps;
        const double plus = total_loss(inst);
        model_spans[s][k] = saved - kEps;
        const double minus = total_loss(inst);
        model_spans[s][k] = saved;

        const double fd = (plus - minus) / (2.0 * kEps);
        const double a = analytic_spans[s][k];
        const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
        trial_max = std::max(trial_max, rel);
      }
    }

    result.max_rel_error = std::max(result.max_rel_error, trial_max);
    const bool ok = trial_max <= kTolerance;
    if (!ok) ++result.failures;
    os << "trial " << trial << ": T=" << inst.xs.size() << " D=" << inst.model.lstm.input_dim
       << " H=" << inst.model.lstm.hidden_dim
       << (inst.model.options.peepholes ? " peepholes" : " no-peepholes")
       << (inst.masks.empty() ? "" : " dropout") << " max_rel_err=" << trial_max
       << (ok ? " ok" : " FAIL") << "\n";
  }
  os << (result.passed() ? "gradcheck passed" : "gradcheck FAILED")
     << " (max relative error " << result.max_rel_error << " over " << result.trials
     << " trials)\n";
  return result;
}

}  // namespace seqloc
