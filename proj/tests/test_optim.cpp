#include <doctest.h>

#include <cmath>

#include "seqloc/errors.hpp"
#include "seqloc/optim.hpp"
#include "seqloc/rng.hpp"

using namespace seqloc;

namespace {

// Smallest possible model: D=H=1, so every buffer is one scalar.
Model scalar_model() {
  Model m;
  m.lstm = LstmParams(1, 1);
  m.reg = RegressorParams(1);
  return m;
}

void fill_gradient(Gradients& g, double value) {
  for (auto span : param_spans(g.lstm, g.reg))
    for (double& x : span) x = value;
}

}  // namespace

TEST_CASE("zero gradient leaves parameters unchanged") {
  Rng rng(301);
  Model m;
  m.lstm = init_lstm(rng, 3, 4);
  m.reg = init_regressor(rng, 4, 0.5, 0.01);
  const Model before = m;
  AdamState state(AdamConfig{}, 3, 4);
  Gradients g(3, 4);
  adam_step(state, m, g);
  auto a = param_spans(m.lstm, m.reg);
  auto b = param_spans(before.lstm, before.reg);
  for (std::size_t s = 0; s < a.size(); ++s)
    for (std::size_t k = 0; k < a[s].size(); ++k) CHECK(a[s][k] == b[s][k]);
  CHECK(state.step_count == 1);
}

TEST_CASE("scalar update matches the frozen two-step oracle trace") {
  Model m = scalar_model();  // all parameters start at 0
  AdamState state(AdamConfig{}, 1, 1);
  Gradients g(1, 1);
  fill_gradient(g, 1.0);

  adam_step(state, m, g);
  for (auto span : param_spans(m.lstm, m.reg))
    for (double x : span) CHECK(x == doctest::Approx(-0.00099999999000000093).epsilon(1e-12));

  adam_step(state, m, g);
  for (auto span : param_spans(m.lstm, m.reg))
    for (double x : span) CHECK(x == doctest::Approx(-0.0019999999799999949).epsilon(1e-12));
  CHECK(state.step_count == 2);
}

TEST_CASE("per-step magnitude stays within lr * 1.2 on unit gradients") {
  Model m = scalar_model();
  AdamState state(AdamConfig{}, 1, 1);
  Gradients g(1, 1);
  double prev = 0.0;
  for (int step = 0; step < 20; ++step) {
    fill_gradient(g, step % 2 ? 1.0 : -1.0);  // alternating unit gradients
    adam_step(state, m, g);
    const double now = m.reg.b[0];
    CHECK(std::abs(now - prev) <= 1e-3 * 1.2);
    prev = now;
  }
}

TEST_CASE("beta1=beta2=0 reduces to the sign-like update") {
  Model m = scalar_model();
  AdamConfig cfg;
  cfg.beta1 = 0.0;
  cfg.beta2 = 0.0;
  AdamState state(cfg, 1, 1);
  Gradients g(1, 1);
  fill_gradient(g, -2.5);
  adam_step(state, m, g);
  const double expected = -cfg.lr * (-2.5) / (std::abs(-2.5) + cfg.eps);
  for (auto span : param_spans(m.lstm, m.reg))
    for (double x : span) CHECK(x == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("identical state and inputs give identical updates") {
  Rng rng(303);
  Model m1;
  m1.lstm = init_lstm(rng, 2, 3);
  m1.reg = init_regressor(rng, 3, 0.5, 0.01);
  Model m2 = m1;
  AdamState s1(AdamConfig{}, 2, 3);
  AdamState s2(AdamConfig{}, 2, 3);
  Gradients g(2, 3);
  for (auto span : param_spans(g.lstm, g.reg))
    for (double& x : span) x = rng.normal();
  adam_step(s1, m1, g);
  adam_step(s2, m2, g);
  auto a = param_spans(m1.lstm, m1.reg);
  auto b = param_spans(m2.lstm, m2.reg);
  for (std::size_t s = 0; s < a.size(); ++s)
    for (std::size_t k = 0; k < a[s].size(); ++k) CHECK(a[s][k] == b[s][k]);
}

TEST_CASE("non-finite gradients abort the step without touching parameters") {
  Model m = scalar_model();
  m.reg.b[0] = 0.75;
  AdamState state(AdamConfig{}, 1, 1);
  Gradients g(1, 1);
  fill_gradient(g, 1.0);
  g.lstm.b_c[0] = std::nan("");
  CHECK_THROWS_AS(adam_step(state, m, g), NonFiniteGradientError);
  CHECK(m.reg.b[0] == 0.75);
  CHECK(state.step_count == 0);

  g.lstm.b_c[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(adam_step(state, m, g), NonFiniteGradientError);
}

TEST_CASE("shape mismatch is rejected") {
  Model m = scalar_model();
  AdamState state(AdamConfig{}, 1, 1);
  Gradients g(2, 2);
  CHECK_THROWS_AS(adam_step(state, m, g), ShapeMismatchError);
}
