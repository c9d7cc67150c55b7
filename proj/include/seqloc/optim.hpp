#pragma once

#include <cstdint>

#include "seqloc/net.hpp"

namespace seqloc {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step_count = 0;
  Gradients m;  // first moments
  Gradients v;  // second moments

  AdamState() = default;
  AdamState(const AdamConfig& config, int input_dim, int hidden_dim)
      : config(config), m(input_dim, hidden_dim), v(input_dim, hidden_dim) {}
};

// One bias-corrected Adam update applied in place. Throws
// NonFiniteGradientError before touching any parameter if the gradients
// contain NaN or Inf, and ShapeMismatchError when buffer shapes disagree.
void adam_step(AdamState& state, Model& model, const Gradients& grads);

}  // namespace seqloc
