#include <doctest.h>

#include <cmath>
#include <vector>

#include "seqloc/errors.hpp"
#include "seqloc/loss.hpp"
#include "seqloc/rng.hpp"

using namespace seqloc;

namespace {

Pose random_pose(Rng& rng, double scale) {
  Pose p;
  p.position = {rng.uniform(-scale, scale), rng.uniform(-scale, scale),
                rng.uniform(-scale, scale)};
  p.orientation = normalize(Quaternion{rng.normal(), rng.normal(), rng.normal(), rng.normal()});
  return p;
}

PosePrediction random_prediction(Rng& rng, double scale) {
  PosePrediction p;
  p.position = {rng.uniform(-scale, scale), rng.uniform(-scale, scale),
                rng.uniform(-scale, scale)};
  p.raw_orientation = {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
  return p;
}

}  // namespace

TEST_CASE("exact prediction with no regularization has zero loss") {
  Pose truth;
  truth.position = {1, 2, 3};
  truth.orientation = normalize(Quaternion{0.5, 0.5, 0.5, 0.5});
  PosePrediction pred;
  pred.position = truth.position;
  pred.raw_orientation = truth.orientation;
  LossWeights w;
  w.gamma = 0.0;
  w.delta = 0.0;
  const LossBreakdown b = frame_loss(pred, truth, std::nullopt, w, 0.0);
  CHECK(b.total == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("temporal term is exactly zero at t=0") {
  Rng rng(201);
  const Pose truth = random_pose(rng, 5.0);
  const PosePrediction pred = random_prediction(rng, 5.0);
  LossWeights w;
  w.delta = 123.0;  // would dominate if it leaked in
  const LossBreakdown b = frame_loss(pred, truth, std::nullopt, w, 0.0);
  CHECK(b.temporal_term == 0.0);
}

TEST_CASE("temporal term equals delta times the predicted jump") {
  Pose truth;
  PosePrediction pred;
  pred.position = {1.0, 1.0, 0.0};
  pred.raw_orientation = truth.orientation;
  PrevFrame prev;
  prev.predicted_position = {1.0, 0.0, 0.0};
  LossWeights w;
  w.gamma = 0.0;
  w.delta = 0.25;
  const LossBreakdown b = frame_loss(pred, truth, prev, w, 0.0);
  CHECK(b.temporal_term == doctest::Approx(0.25 * 1.0).epsilon(1e-14));
}

TEST_CASE("three-four-five position residual") {
  Pose truth;
  truth.position = {0, 0, 0};
  PosePrediction pred;
  pred.position = {3, 4, 0};
  pred.raw_orientation = truth.orientation;
  LossWeights w;
  w.gamma = 0.0;
  w.delta = 0.0;
  const LossBreakdown b = frame_loss(pred, truth, std::nullopt, w, 0.0);
  CHECK(b.total == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("breakdown totals are consistent per frame") {
  Rng rng(203);
  for (int k = 0; k < 50; ++k) {
    const Pose truth = random_pose(rng, 3.0);
    const PosePrediction pred = random_prediction(rng, 3.0);
    std::optional<PrevFrame> prev;
    if (k % 2) prev = PrevFrame{{rng.normal(), rng.normal(), rng.normal()}, truth.position};
    LossWeights w;
    w.beta = rng.uniform(0.5, 2.0);
    const LossBreakdown b = frame_loss(pred, truth, prev, w, rng.uniform(0.0, 4.0));
    CHECK(b.total == doctest::Approx(b.position_term + b.orientation_term + b.weight_decay_term +
                                     b.temporal_term)
                         .epsilon(1e-12));
    CHECK(b.total >= 0.0);
  }
}

TEST_CASE("sequence loss sums frame losses and links only inside the window") {
  Rng rng(205);
  std::vector<Pose> truths = {random_pose(rng, 2.0), random_pose(rng, 2.0)};
  std::vector<PosePrediction> preds = {random_prediction(rng, 2.0), random_prediction(rng, 2.0)};
  LossWeights w;
  w.beta = 1.3;
  w.delta = 0.7;
  const double wnorm = 2.5;
  const LossBreakdown seq = sequence_loss(preds, truths, w, wnorm);
  const LossBreakdown f0 = frame_loss(preds[0], truths[0], std::nullopt, w, wnorm);
  const LossBreakdown f1 = frame_loss(preds[1], truths[1],
                                      PrevFrame{preds[0].position, truths[0].position}, w, wnorm);
  CHECK(seq.total == doctest::Approx(f0.total + f1.total).epsilon(1e-13));
  CHECK(seq.temporal_term == doctest::Approx(f1.temporal_term).epsilon(1e-13));

  // T=1 has no temporal contribution at all
  const LossBreakdown single =
      sequence_loss(std::span(preds.data(), 1), std::span(truths.data(), 1), w, wnorm);
  CHECK(single.temporal_term == 0.0);
  CHECK(single.total == doctest::Approx(f0.total).epsilon(1e-13));
}

TEST_CASE("identical predictions zero the temporal term") {
  Rng rng(207);
  const PosePrediction pred = random_prediction(rng, 2.0);
  std::vector<PosePrediction> preds(3, pred);
  std::vector<Pose> truths = {random_pose(rng, 2.0), random_pose(rng, 2.0),
                              random_pose(rng, 2.0)};
  LossWeights w;
  w.delta = 5.0;
  const LossBreakdown b = sequence_loss(preds, truths, w, 0.0);
  CHECK(b.temporal_term == 0.0);
}

TEST_CASE("delta=0 recovers the single-frame loss plus decay term by term") {
  Rng rng(209);
  std::vector<Pose> truths;
  std::vector<PosePrediction> preds;
  for (int t = 0; t < 4; ++t) {
    truths.push_back(random_pose(rng, 2.0));
    preds.push_back(random_prediction(rng, 2.0));
  }
  LossWeights with_delta;
  with_delta.delta = 0.3;
  LossWeights no_delta = with_delta;
  no_delta.delta = 0.0;
  const double wnorm = 1.7;
  const LossBreakdown a = sequence_loss(preds, truths, with_delta, wnorm);
  const LossBreakdown b = sequence_loss(preds, truths, no_delta, wnorm);
  CHECK(a.position_term == doctest::Approx(b.position_term).epsilon(1e-14));
  CHECK(a.orientation_term == doctest::Approx(b.orientation_term).epsilon(1e-14));
  CHECK(a.weight_decay_term == doctest::Approx(b.weight_decay_term).epsilon(1e-14));
  CHECK(b.temporal_term == 0.0);
  // and the temporal term is linear in delta
  LossWeights double_delta = with_delta;
  double_delta.delta = 0.6;
  const LossBreakdown c = sequence_loss(preds, truths, double_delta, wnorm);
  CHECK(c.temporal_term == doctest::Approx(2.0 * a.temporal_term).epsilon(1e-12));
  CHECK(c.temporal_term >= a.temporal_term);
}

TEST_CASE("loss is invariant under a simultaneous quaternion sign flip") {
  Rng rng(211);
  Pose truth = random_pose(rng, 2.0);
  PosePrediction pred = random_prediction(rng, 2.0);
  LossWeights w;
  const LossBreakdown a = frame_loss(pred, truth, std::nullopt, w, 0.0);
  truth.orientation = {-truth.orientation.w, -truth.orientation.x, -truth.orientation.y,
                       -truth.orientation.z};
  pred.raw_orientation = {-pred.raw_orientation.w, -pred.raw_orientation.x,
                          -pred.raw_orientation.y, -pred.raw_orientation.z};
  const LossBreakdown b = frame_loss(pred, truth, std::nullopt, w, 0.0);
  CHECK(a.orientation_term == doctest::Approx(b.orientation_term).epsilon(1e-14));
}

TEST_CASE("length mismatch is rejected") {
  std::vector<PosePrediction> preds(2);
  std::vector<Pose> truths(3);
  LossWeights w;
  CHECK_THROWS_AS(sequence_loss(preds, truths, w, 0.0), LengthMismatchError);
  CHECK_THROWS_AS(loss_gradient(preds, truths, w, 0.0), LengthMismatchError);
}

TEST_CASE("gradient is zero at zero residuals with no regularization") {
  Pose truth;
  truth.position = {1, 1, 1};
  PosePrediction pred;
  pred.position = truth.position;
  pred.raw_orientation = truth.orientation;
  std::vector<PosePrediction> preds(3, pred);
  std::vector<Pose> truths(3, truth);
  LossWeights w;
  w.gamma = 0.0;
  w.delta = 0.4;
  const LossGradient g = loss_gradient(preds, truths, w, 0.0);
  for (const Vec& frame : g.per_frame)
    for (double v : frame) CHECK(v == 0.0);
  CHECK(g.weight_decay_coeff == 0.0);
}

TEST_CASE("single-frame position gradient is the unit residual") {
  Pose truth;
  PosePrediction pred;
  pred.position = {3, 4, 0};
  pred.raw_orientation = truth.orientation;
  LossWeights w;
  w.beta = 0.0;
  w.gamma = 0.0;
  w.delta = 0.0;
  const std::vector<PosePrediction> preds{pred};
  const std::vector<Pose> truths{truth};
  const LossGradient g = loss_gradient(preds, truths, w, 0.0);
  CHECK(g.per_frame[0][0] == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(g.per_frame[0][1] == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(g.per_frame[0][2] == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("gradients match finite differences on 50 random instances") {
  Rng rng(213);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int T = 1 + rng.uniform_int(4);
    std::vector<Pose> truths;
    std::vector<PosePrediction> preds;
    for (int t = 0; t < T; ++t) {
      truths.push_back(random_pose(rng, 2.0));
      preds.push_back(random_prediction(rng, 2.0));
    }
    LossWeights w;
    w.beta = rng.uniform(0.5, 2.0);
    w.gamma = rng.uniform(0.0, 1e-3);
    w.delta = trial % 5 == 4 ? 0.0 : rng.uniform(0.1, 0.5);
    w.temporal_on_error = trial % 7 == 6;
    const double wnorm = rng.uniform(0.5, 3.0);

    const LossGradient g = loss_gradient(preds, truths, w, wnorm);

    const double eps = 1e-6;
    for (int t = 0; t < T; ++t) {
      double* slots[7] = {&preds[t].position.x,          &preds[t].position.y,
                          &preds[t].position.z,          &preds[t].raw_orientation.w,
                          &preds[t].raw_orientation.x,   &preds[t].raw_orientation.y,
                          &preds[t].raw_orientation.z};
      for (int k = 0; k < 7; ++k) {
        const double saved = *slots[k];
        *slots[k] = saved + eps;
        const double plus = sequence_loss(preds, truths, w, wnorm).total;
        *slots[k] = saved - eps;
        const double minus = sequence_loss(preds, truths, w, wnorm).total;
        *slots[k] = saved;
        const double fd = (plus - minus) / (2 * eps);
        const double rel =
            std::abs(g.per_frame[t][k] - fd) /
            std::max({std::abs(g.per_frame[t][k]), std::abs(fd), 1e-6});
        worst = std::max(worst, rel);
      }
    }
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("balance_beta ratio, clamp, and degenerate denominator") {
  // position residual 10, orientation residual 0.02 -> beta 500
  Pose truth;
  truth.position = {0, 0, 0};
  PosePrediction pred;
  pred.position = {10, 0, 0};
  pred.raw_orientation = {1.02, 0, 0, 0};  // residual (0.02,0,0,0)
  std::vector<PosePrediction> preds{pred};
  std::vector<Pose> truths{truth};
  CHECK(balance_beta(preds, truths) == doctest::Approx(500.0).epsilon(1e-9));

  // equal magnitudes -> 1
  preds[0].position = {0.5, 0, 0};
  preds[0].raw_orientation = {1.5, 0, 0, 0};
  CHECK(balance_beta(preds, truths) == doctest::Approx(1.0).epsilon(1e-12));

  // clamped to 2000
  preds[0].position = {1e6, 0, 0};
  preds[0].raw_orientation = {1.001, 0, 0, 0};
  CHECK(balance_beta(preds, truths) == doctest::Approx(2000.0));

  // exact orientation match -> degenerate denominator
  preds[0].raw_orientation = truth.orientation;
  CHECK_THROWS_AS(balance_beta(preds, truths), DegenerateOrientationTermError);
}
