#include "seqloc/optim.hpp"

#include <cmath>

#include "seqloc/errors.hpp"

namespace seqloc {

void adam_step(AdamState& state, Model& model, const Gradients& grads) {
  auto params = param_spans(model.lstm, model.reg);
  auto g = param_spans(grads.lstm, grads.reg);
  auto m = param_spans(state.m.lstm, state.m.reg);
  auto v = param_spans(state.v.lstm, state.v.reg);

  for (std::size_t s = 0; s < params.size(); ++s)
    if (g[s].size() != params[s].size() || m[s].size() != params[s].size())
      throw ShapeMismatchError("gradient/moment buffers do not match parameters");

  for (const auto& span : g)
    for (double x : span)
      if (!std::isfinite(x)) throw NonFiniteGradientError("non-finite gradient, step aborted");

  state.step_count += 1;
  const AdamConfig& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step_count));

  for (std::size_t s = 0; s < params.size(); ++s) {
    for (std::size_t k = 0; k < params[s].size(); ++k) {
      const double grad = g[s][k];
      m[s][k] = c.beta1 * m[s][k] + (1.0 - c.beta1) * grad;
      v[s][k] = c.beta2 * v[s][k] + (1.0 - c.beta2) * grad * grad;
      const double m_hat = m[s][k] / bc1;
      const double v_hat = v[s][k] / bc2;
      params[s][k] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

}  // namespace seqloc
