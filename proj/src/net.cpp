#include "seqloc/net.hpp"

#include <cmath>

#include "seqloc/errors.hpp"

namespace seqloc {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline void apply_sigmoid(Vec& v) {
  for (double& e : v) e = sigmoid(e);
}

inline void apply_tanh(Vec& v) {
  for (double& e : v) e = std::tanh(e);
}

void check_shapes(const LstmParams& p, const Vec& x, const LstmState& prev) {
  const int D = p.input_dim;
  const int H = p.hidden_dim;
  if (static_cast<int>(x.size()) != D) throw ShapeMismatchError("input size does not match input_dim");
  if (static_cast<int>(prev.h.size()) != H || static_cast<int>(prev.c.size()) != H)
    throw ShapeMismatchError("state size does not match hidden_dim");
}

void fill_xavier(Rng& rng, Matrix& m, int fan_in, int fan_out) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& e : m.a) e = rng.uniform(-bound, bound);
}

void fill_xavier(Rng& rng, Vec& v, int fan_in, int fan_out) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& e : v) e = rng.uniform(-bound, bound);
}

template <class Params>
auto spans_impl(Params& lstm, auto& reg, bool weights_only) {
  using SpanT = std::conditional_t<std::is_const_v<Params>, std::span<const double>,
                                   std::span<double>>;
  std::vector<SpanT> out;
  out.reserve(17);
  for (auto* m : {&lstm.W_xi, &lstm.W_xf, &lstm.W_xo, &lstm.W_xc, &lstm.W_hi, &lstm.W_hf,
                  &lstm.W_ho, &lstm.W_hc})
    out.push_back(SpanT(m->a));
  for (auto* v : {&lstm.w_ci, &lstm.w_cf, &lstm.w_co}) out.push_back(SpanT(*v));
  if (!weights_only)
    for (auto* v : {&lstm.b_i, &lstm.b_f, &lstm.b_o, &lstm.b_c}) out.push_back(SpanT(*v));
  out.push_back(SpanT(reg.W.a));
  if (!weights_only) out.push_back(SpanT(reg.b));
  return out;
}

}  // namespace

LstmParams::LstmParams(int input_dim, int hidden_dim)
    : input_dim(input_dim),
      hidden_dim(hidden_dim),
      W_xi(hidden_dim, input_dim),
      W_xf(hidden_dim, input_dim),
      W_xo(hidden_dim, input_dim),
      W_xc(hidden_dim, input_dim),
      W_hi(hidden_dim, hidden_dim),
      W_hf(hidden_dim, hidden_dim),
      W_ho(hidden_dim, hidden_dim),
      W_hc(hidden_dim, hidden_dim),
      w_ci(hidden_dim, 0.0),
      w_cf(hidden_dim, 0.0),
      w_co(hidden_dim, 0.0),
      b_i(hidden_dim, 0.0),
      b_f(hidden_dim, 0.0),
      b_o(hidden_dim, 0.0),
      b_c(hidden_dim, 0.0) {}

RegressorParams::RegressorParams(int hidden_dim) : W(kPoseDim, hidden_dim), b(kPoseDim, 0.0) {}

LstmState lstm_step(const LstmParams& params, const LstmOptions& options, const Vec& x,
                    const LstmState& prev, StepCache* cache, GateTrace* trace) {
  check_shapes(params, x, prev);
  const int H = params.hidden_dim;

  Vec ai = params.b_i;
  Vec af = params.b_f;
  Vec ao = params.b_o;
  Vec ag = params.b_c;
  matvec_acc(params.W_xi, x, ai);
  matvec_acc(params.W_hi, prev.h, ai);
  matvec_acc(params.W_xf, x, af);
  matvec_acc(params.W_hf, prev.h, af);
  matvec_acc(params.W_xo, x, ao);
  matvec_acc(params.W_ho, prev.h, ao);
  matvec_acc(params.W_xc, x, ag);
  matvec_acc(params.W_hc, prev.h, ag);
  if (options.peepholes) {
    for (int j = 0; j < H; ++j) {
      ai[j] += params.w_ci[j] * prev.c[j];
      af[j] += params.w_cf[j] * prev.c[j];
      if (!options.output_peephole_current_cell) ao[j] += params.w_co[j] * prev.c[j];
    }
  }
  apply_sigmoid(ai);
  apply_sigmoid(af);
  apply_tanh(ag);

  LstmState next(H);
  for (int j = 0; j < H; ++j) next.c[j] = af[j] * prev.c[j] + ai[j] * ag[j];

  if (options.peepholes && options.output_peephole_current_cell)
    for (int j = 0; j < H; ++j) ao[j] += params.w_co[j] * next.c[j];
  apply_sigmoid(ao);

  for (int j = 0; j < H; ++j) next.h[j] = ao[j] * std::tanh(next.c[j]);

  if (cache) {
    cache->x = x;
    cache->h_prev = prev.h;
    cache->c_prev = prev.c;
    cache->i = ai;
    cache->f = af;
    cache->o = ao;
    cache->g = ag;
    cache->c = next.c;
    cache->h = next.h;
  }
  if (trace) {
    trace->input_gate.push_back(ai);
    trace->forget_gate.push_back(af);
    trace->output_gate.push_back(ao);
  }
  return next;
}

std::vector<LstmState> lstm_forward(const LstmParams& params, const LstmOptions& options,
                                    std::span<const Vec> xs, const LstmState& init,
                                    ForwardCache* cache, GateTrace* trace) {
  std::vector<LstmState> states;
  states.reserve(xs.size());
  if (cache) {
    cache->options = options;
    cache->steps.resize(xs.size());
  }
  LstmState state = init;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    state = lstm_step(params, options, xs[t], state, cache ? &cache->steps[t] : nullptr, trace);
    states.push_back(state);
  }
  return states;
}

Vec dropout_mask(int hidden_dim, double p, Rng& rng) {
  Vec mask(hidden_dim, 1.0);
  if (p <= 0.0) return mask;
  const double keep = 1.0 - p;
  for (double& m : mask) m = rng.uniform() < p ? 0.0 : 1.0 / keep;
  return mask;
}

Vec dropout(const Vec& h, double p, DropoutMode mode, Rng& rng) {
  if (mode == DropoutMode::Eval || p <= 0.0) return h;
  const Vec mask = dropout_mask(static_cast<int>(h.size()), p, rng);
  Vec out(h.size());
  for (std::size_t j = 0; j < h.size(); ++j) out[j] = mask[j] * h[j];
  return out;
}

PosePrediction regress(const RegressorParams& params, const Vec& h) {
  if (static_cast<int>(h.size()) != params.W.cols)
    throw ShapeMismatchError("hidden size does not match regressor");
  Vec p = params.b;
  matvec_acc(params.W, h, p);
  PosePrediction pred;
  pred.position = {p[0], p[1], p[2]};
  pred.raw_orientation = {p[3], p[4], p[5], p[6]};
  return pred;
}

SequenceForward forward_sequence(const Model& model, std::span<const Vec> xs, double dropout_p,
                                 Rng* dropout_rng) {
  const int H = model.lstm.hidden_dim;
  SequenceForward fwd;
  lstm_forward(model.lstm, model.options, xs, LstmState(H), &fwd.cache, &fwd.gates);
  const bool train = dropout_rng != nullptr && dropout_p > 0.0;
  if (train) fwd.cache.dropout_masks.resize(xs.size());
  fwd.predictions.reserve(xs.size());
  for (std::size_t t = 0; t < xs.size(); ++t) {
    Vec h = fwd.cache.steps[t].h;
    if (train) {
      fwd.cache.dropout_masks[t] = dropout_mask(H, dropout_p, *dropout_rng);
      for (int j = 0; j < H; ++j) h[j] *= fwd.cache.dropout_masks[t][j];
    }
    fwd.predictions.push_back(regress(model.reg, h));
  }
  return fwd;
}

SequenceForward forward_sequence_with_masks(const Model& model, std::span<const Vec> xs,
                                            const std::vector<Vec>& masks) {
  if (!masks.empty() && masks.size() != xs.size())
    throw CacheMismatchError("mask count does not match sequence length");
  const int H = model.lstm.hidden_dim;
  SequenceForward fwd;
  lstm_forward(model.lstm, model.options, xs, LstmState(H), &fwd.cache, &fwd.gates);
  fwd.cache.dropout_masks = masks;
  fwd.predictions.reserve(xs.size());
  for (std::size_t t = 0; t < xs.size(); ++t) {
    Vec h = fwd.cache.steps[t].h;
    if (!masks.empty())
      for (int j = 0; j < H; ++j) h[j] *= masks[t][j];
    fwd.predictions.push_back(regress(model.reg, h));
  }
  return fwd;
}

Gradients backward(const Model& model, const ForwardCache& cache,
                   const std::vector<Vec>& dLoss_dPose) {
  const int T = static_cast<int>(cache.steps.size());
  if (static_cast<int>(dLoss_dPose.size()) != T)
    throw CacheMismatchError("gradient list length does not match cached sequence length");
  if (!cache.dropout_masks.empty() && static_cast<int>(cache.dropout_masks.size()) != T)
    throw CacheMismatchError("dropout mask count does not match cached sequence length");

  const LstmParams& p = model.lstm;
  const LstmOptions& opt = cache.options;
  const int H = p.hidden_dim;
  const int D = p.input_dim;
  Gradients grads(D, H);

  Vec dh_carry(H, 0.0);  // into h_t from step t+1
  Vec dc_carry(H, 0.0);  // into c_t from step t+1
  Vec dh(H), dc(H), da_i(H), da_f(H), da_o(H), da_g(H), h_dropped(H);

  for (int t = T - 1; t >= 0; --t) {
    const StepCache& s = cache.steps[t];
    const Vec& dP = dLoss_dPose[t];
    if (static_cast<int>(dP.size()) != kPoseDim)
      throw ShapeMismatchError("per-frame gradient must have 7 components");

    // Regressor path; dropout mask scales both the regressor input and the
    // gradient flowing back into h_t.
    const Vec* mask = cache.dropout_masks.empty() ? nullptr : &cache.dropout_masks[t];
    for (int j = 0; j < H; ++j) h_dropped[j] = mask ? (*mask)[j] * s.h[j] : s.h[j];
    outer_acc(grads.reg.W, dP, h_dropped);
    for (int k = 0; k < kPoseDim; ++k) grads.reg.b[k] += dP[k];

    std::fill(dh.begin(), dh.end(), 0.0);
    matTvec_acc(model.reg.W, dP, dh);
    if (mask)
      for (int j = 0; j < H; ++j) dh[j] *= (*mask)[j];
    for (int j = 0; j < H; ++j) dh[j] += dh_carry[j];

    // h_t = o_t tanh(c_t)
    for (int j = 0; j < H; ++j) {
      const double tc = std::tanh(s.c[j]);
      da_o[j] = dh[j] * tc * s.o[j] * (1.0 - s.o[j]);
      dc[j] = dh[j] * s.o[j] * (1.0 - tc * tc) + dc_carry[j];
    }
    // Output peephole on c_t feeds straight back into the same step's cell.
    if (opt.peepholes && opt.output_peephole_current_cell)
      for (int j = 0; j < H; ++j) dc[j] += p.w_co[j] * da_o[j];

    // c_t = f_t c_{t-1} + i_t g_t
    for (int j = 0; j < H; ++j) {
      da_i[j] = dc[j] * s.g[j] * s.i[j] * (1.0 - s.i[j]);
      da_f[j] = dc[j] * s.c_prev[j] * s.f[j] * (1.0 - s.f[j]);
      da_g[j] = dc[j] * s.i[j] * (1.0 - s.g[j] * s.g[j]);
    }

    outer_acc(grads.lstm.W_xi, da_i, s.x);
    outer_acc(grads.lstm.W_xf, da_f, s.x);
    outer_acc(grads.lstm.W_xo, da_o, s.x);
    outer_acc(grads.lstm.W_xc, da_g, s.x);
    outer_acc(grads.lstm.W_hi, da_i, s.h_prev);
    outer_acc(grads.lstm.W_hf, da_f, s.h_prev);
    outer_acc(grads.lstm.W_ho, da_o, s.h_prev);
    outer_acc(grads.lstm.W_hc, da_g, s.h_prev);
    for (int j = 0; j < H; ++j) {
      grads.lstm.b_i[j] += da_i[j];
      grads.lstm.b_f[j] += da_f[j];
      grads.lstm.b_o[j] += da_o[j];
      grads.lstm.b_c[j] += da_g[j];
    }
    if (opt.peepholes) {
      for (int j = 0; j < H; ++j) {
        grads.lstm.w_ci[j] += da_i[j] * s.c_prev[j];
        grads.lstm.w_cf[j] += da_f[j] * s.c_prev[j];
        grads.lstm.w_co[j] +=
            da_o[j] * (opt.output_peephole_current_cell ? s.c[j] : s.c_prev[j]);
      }
    }

    // Carries into step t-1.
    std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
    matTvec_acc(p.W_hi, da_i, dh_carry);
    matTvec_acc(p.W_hf, da_f, dh_carry);
    matTvec_acc(p.W_ho, da_o, dh_carry);
    matTvec_acc(p.W_hc, da_g, dh_carry);
    for (int j = 0; j < H; ++j) {
      dc_carry[j] = dc[j] * s.f[j];
      if (opt.peepholes) {
        dc_carry[j] += p.w_ci[j] * da_i[j] + p.w_cf[j] * da_f[j];
        if (!opt.output_peephole_current_cell) dc_carry[j] += p.w_co[j] * da_o[j];
      }
    }
  }
  return grads;
}

LstmParams init_lstm(Rng& rng, int input_dim, int hidden_dim) {
  LstmParams p(input_dim, hidden_dim);
  const int D = input_dim;
  const int H = hidden_dim;
  fill_xavier(rng, p.W_xi, D, H);
  fill_xavier(rng, p.W_xf, D, H);
  fill_xavier(rng, p.W_xo, D, H);
  fill_xavier(rng, p.W_xc, D, H);
  fill_xavier(rng, p.W_hi, H, H);
  fill_xavier(rng, p.W_hf, H, H);
  fill_xavier(rng, p.W_ho, H, H);
  fill_xavier(rng, p.W_hc, H, H);
  fill_xavier(rng, p.w_ci, H, H);
  fill_xavier(rng, p.w_cf, H, H);
  fill_xavier(rng, p.w_co, H, H);
  return p;
}

RegressorParams init_regressor(Rng& rng, int hidden_dim, double sigma_pos, double sigma_orient) {
  RegressorParams p(hidden_dim);
  for (int i = 0; i < kPoseDim; ++i) {
    const double sigma = i < 3 ? sigma_pos : sigma_orient;
    for (int j = 0; j < hidden_dim; ++j) p.W(i, j) = rng.normal(0.0, sigma);
  }
  return p;
}

std::vector<std::span<double>> param_spans(LstmParams& lstm, RegressorParams& reg) {
  return spans_impl(lstm, reg, false);
}

std::vector<std::span<const double>> param_spans(const LstmParams& lstm,
                                                 const RegressorParams& reg) {
  return spans_impl(lstm, reg, false);
}

std::vector<std::span<double>> weight_spans(LstmParams& lstm, RegressorParams& reg) {
  return spans_impl(lstm, reg, true);
}

std::vector<std::span<const double>> weight_spans(const LstmParams& lstm,
                                                  const RegressorParams& reg) {
  return spans_impl(lstm, reg, true);
}

double weight_norm_sq(const Model& model) {
  double s = 0.0;
  for (auto span : weight_spans(model.lstm, model.reg))
    for (double w : span) s += w * w;
  return s;
}

}  // namespace seqloc
