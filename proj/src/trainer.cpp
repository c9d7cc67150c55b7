#include "seqloc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "seqloc/errors.hpp"
#include "seqloc/rng.hpp"

namespace seqloc {

namespace {

std::string fmt_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void add_scaled(Gradients& acc, const Gradients& g, double scale) {
  auto dst = param_spans(acc.lstm, acc.reg);
  auto src = param_spans(g.lstm, g.reg);
  for (std::size_t s = 0; s < dst.size(); ++s)
    for (std::size_t k = 0; k < dst[s].size(); ++k) dst[s][k] += scale * src[s][k];
}

void scale_params(Gradients& g, double scale) {
  for (auto span : param_spans(g.lstm, g.reg))
    for (double& x : span) x *= scale;
}

std::vector<Vec> gather_inputs(const Dataset& ds, int start, int T) {
  std::vector<Vec> xs;
  xs.reserve(T);
  for (int t = 0; t < T; ++t) xs.push_back(ds.features[start + t]);
  return xs;
}

std::vector<Pose> gather_truths(const Dataset& ds, int start, int T) {
  std::vector<Pose> truths;
  truths.reserve(T);
  for (int t = 0; t < T; ++t) truths.push_back(ds.poses[start + t]);
  return truths;
}

// One sequence's contribution to the batch gradient, weight decay included.
struct SequenceWork {
  Gradients grads;
  LossBreakdown loss;
};

SequenceWork sequence_gradient(const Model& model, const Dataset& ds, int start, int T,
                               double dropout_p, const LossWeights& weights, double wnorm_sq,
                               std::uint64_t rng_seed) {
  const std::vector<Vec> xs = gather_inputs(ds, start, T);
  const std::vector<Pose> truths = gather_truths(ds, start, T);

  SequenceWork work;
  Rng rng(rng_seed);
  Rng* rng_ptr = dropout_p > 0.0 ? &rng : nullptr;
  const SequenceForward fwd = forward_sequence(model, xs, dropout_p, rng_ptr);

  work.loss = sequence_loss(fwd.predictions, truths, weights, wnorm_sq);
  const LossGradient lg = loss_gradient(fwd.predictions, truths, weights, wnorm_sq);
  work.grads = backward(model, fwd.cache, lg.per_frame);
  if (lg.weight_decay_coeff != 0.0) {
    auto gw = weight_spans(work.grads.lstm, work.grads.reg);
    auto pw = weight_spans(model.lstm, model.reg);
    for (std::size_t s = 0; s < gw.size(); ++s)
      for (std::size_t k = 0; k < gw[s].size(); ++k)
        gw[s][k] += lg.weight_decay_coeff * pw[s][k];
  }
  return work;
}

struct SequenceEval {
  std::vector<PosePrediction> predictions;
  GateTrace gates;
};

// Eval-mode forward for each window; slot-per-sequence so the parallel and
// serial paths agree bit for bit.
std::vector<SequenceEval> forward_split(const Model& model, const Dataset& ds,
                                        std::span<const int> starts, int T, ExecMode mode) {
  const int n = static_cast<int>(starts.size());
  std::vector<SequenceEval> out(n);
  auto run_one = [&](int s) {
    const std::vector<Vec> xs = gather_inputs(ds, starts[s], T);
    SequenceForward fwd = forward_sequence(model, xs, 0.0, nullptr);
    out[s] = SequenceEval{std::move(fwd.predictions), std::move(fwd.gates)};
  };
  if (mode == ExecMode::Parallel) {
    #pragma omp parallel for schedule(dynamic)
    for (int s = 0; s < n; ++s) run_one(s);
  } else {
    for (int s = 0; s < n; ++s) run_one(s);
  }
  return out;
}

double resolve_beta(const Model& model, const Dataset& ds, std::span<const int> starts, int T,
                    ExecMode mode) {
  const auto evals = forward_split(model, ds, starts, T, mode);
  std::vector<PosePrediction> preds;
  std::vector<Pose> truths;
  for (std::size_t s = 0; s < evals.size(); ++s) {
    for (int t = 0; t < T; ++t) {
      preds.push_back(evals[s].predictions[t]);
      truths.push_back(ds.poses[starts[s] + t]);
    }
  }
  return balance_beta(preds, truths);
}

void shuffle_in_place(std::vector<int>& v, Rng& rng) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i)
    std::swap(v[i], v[rng.uniform_int(i + 1)]);
}

double median_of(Vec values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known = {
      "T",          "batch_sequences",
      "dropout_p",  "gamma",
      "delta",      "beta",
      "sigma_pos",  "sigma_orient",
      "hidden",     "epochs",
      "seed",       "peepholes",
      "output_peephole_current_cell", "unsquared_weight_decay",
      "temporal_on_error", "lr",
      "adam_beta1", "adam_beta2",
      "adam_eps"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown train config key: " + key);
  if (!j.contains("epochs")) throw ConfigError("train config must set epochs");

  TrainConfig c;
  if (j.contains("T")) c.T = j.at("T");
  if (j.contains("batch_sequences")) c.batch_sequences = j.at("batch_sequences");
  if (j.contains("dropout_p")) c.dropout_p = j.at("dropout_p");
  if (j.contains("gamma")) c.gamma = j.at("gamma");
  if (j.contains("delta")) c.delta = j.at("delta");
  if (j.contains("beta")) {
    if (j.at("beta").is_string()) {
      if (j.at("beta") != "auto") throw ConfigError("beta must be a number or \"auto\"");
      c.beta_auto = true;
    } else {
      c.beta = j.at("beta");
      c.beta_auto = false;
    }
  }
  if (j.contains("sigma_pos")) c.sigma_pos = j.at("sigma_pos");
  if (j.contains("sigma_orient")) c.sigma_orient = j.at("sigma_orient");
  if (j.contains("hidden")) c.hidden = j.at("hidden");
  c.epochs = j.at("epochs");
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("peepholes")) c.peepholes = j.at("peepholes");
  if (j.contains("output_peephole_current_cell"))
    c.output_peephole_current_cell = j.at("output_peephole_current_cell");
  if (j.contains("unsquared_weight_decay"))
    c.unsquared_weight_decay = j.at("unsquared_weight_decay");
  if (j.contains("temporal_on_error")) c.temporal_on_error = j.at("temporal_on_error");
  if (j.contains("lr")) c.lr = j.at("lr");
  if (j.contains("adam_beta1")) c.adam_beta1 = j.at("adam_beta1");
  if (j.contains("adam_beta2")) c.adam_beta2 = j.at("adam_beta2");
  if (j.contains("adam_eps")) c.adam_eps = j.at("adam_eps");
  return c;
}

}  // namespace

TrainConfig train_config_from_json_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config: " + path.string());
  nlohmann::json j;
  is >> j;
  return train_config_from_json(j);
}

TrainConfig train_config_from_json_text(const std::string& text) {
  return train_config_from_json(nlohmann::json::parse(text));
}

BatchGradients batch_gradients(const Model& model, const Dataset& dataset,
                               std::span<const int> sequence_starts, int T, double dropout_p,
                               const LossWeights& weights, std::uint64_t dropout_seed,
                               ExecMode mode) {
  const int nb = static_cast<int>(sequence_starts.size());
  const double wnorm_sq = weight_norm_sq(model);
  std::vector<SequenceWork> slots(nb);

  if (mode == ExecMode::Parallel) {
    #pragma omp parallel for schedule(dynamic)
    for (int s = 0; s < nb; ++s)
      slots[s] = sequence_gradient(model, dataset, sequence_starts[s], T, dropout_p, weights,
                                   wnorm_sq, Rng::derive(dropout_seed, s));
  } else {
    for (int s = 0; s < nb; ++s)
      slots[s] = sequence_gradient(model, dataset, sequence_starts[s], T, dropout_p, weights,
                                   wnorm_sq, Rng::derive(dropout_seed, s));
  }

  // Fixed-order reduction keeps the result independent of scheduling.
  BatchGradients out;
  out.grads = Gradients(model.lstm.input_dim, model.lstm.hidden_dim);
  for (int s = 0; s < nb; ++s) {
    add_scaled(out.grads, slots[s].grads, 1.0);
    out.mean_loss.position_term += slots[s].loss.position_term;
    out.mean_loss.orientation_term += slots[s].loss.orientation_term;
    out.mean_loss.weight_decay_term += slots[s].loss.weight_decay_term;
    out.mean_loss.temporal_term += slots[s].loss.temporal_term;
    out.mean_loss.total += slots[s].loss.total;
  }
  const double inv = 1.0 / nb;
  scale_params(out.grads, inv);
  out.mean_loss.position_term *= inv;
  out.mean_loss.orientation_term *= inv;
  out.mean_loss.weight_decay_term *= inv;
  out.mean_loss.temporal_term *= inv;
  out.mean_loss.total *= inv;
  return out;
}

TrainResult train(const TrainConfig& config, const Dataset& dataset, ExecMode mode) {
  if (dataset.manifest.T != config.T)
    throw ConfigMismatchError("dataset was windowed with a different T than the train config");
  const std::vector<int> starts = dataset.sequence_starts(Split::Train);
  if (starts.empty()) throw ConfigError("dataset has no training sequences");
  if (config.epochs < 0) throw ConfigError("epochs must be non-negative");
  if (config.batch_sequences < 1) throw ConfigError("batch_sequences must be positive");
  if (config.hidden < 1) throw ConfigError("hidden size must be positive");
  if (config.dropout_p < 0.0 || config.dropout_p >= 1.0)
    throw ConfigError("dropout probability must lie in [0, 1)");

  const int D = dataset.manifest.feature_dim;
  const int H = config.hidden;

  TrainResult result;
  Model& model = result.checkpoint.model;
  Rng init_rng(Rng::derive(config.seed, 0x101));
  model.lstm = init_lstm(init_rng, D, H);
  model.reg = init_regressor(init_rng, H, config.sigma_pos, config.sigma_orient);
  model.options.peepholes = config.peepholes;
  model.options.output_peephole_current_cell = config.output_peephole_current_cell;

  LossWeights weights;
  weights.beta = config.beta_auto ? resolve_beta(model, dataset, starts, config.T, mode)
                                  : config.beta;
  weights.gamma = config.gamma;
  weights.delta = config.delta;
  weights.unsquared_weight_decay = config.unsquared_weight_decay;
  weights.temporal_on_error = config.temporal_on_error;
  result.checkpoint.beta = weights.beta;

  AdamState adam(AdamConfig{config.lr, config.adam_beta1, config.adam_beta2, config.adam_eps}, D,
                 H);
  Rng shuffle_rng(Rng::derive(config.seed, 0x202));
  const std::uint64_t dropout_root = Rng::derive(config.seed, 0x303);

  std::vector<int> order = starts;
  std::uint64_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_in_place(order, shuffle_rng);
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_sequences) {
      const std::size_t end = std::min(order.size(), begin + config.batch_sequences);
      const std::span<const int> batch(order.data() + begin, end - begin);
      const BatchGradients bg =
          batch_gradients(model, dataset, batch, config.T, config.dropout_p, weights,
                          Rng::derive(dropout_root, step), mode);
      if (!std::isfinite(bg.mean_loss.total))
        throw NonFiniteLossError("non-finite loss at step " + std::to_string(step));
      result.log.push_back(bg.mean_loss);
      adam_step(adam, model, bg.grads);
      ++step;
    }
  }
  result.checkpoint.adam = std::move(adam);
  return result;
}

EvalReport evaluate(const Model& model, const Dataset& dataset, Split split, ExecMode mode) {
  if (dataset.manifest.feature_dim != model.lstm.input_dim)
    throw DimensionMismatchError("checkpoint input dim does not match dataset feature_dim");
  const int T = dataset.manifest.T;
  const std::vector<int> starts = dataset.sequence_starts(split);
  if (starts.empty()) throw ConfigError("requested split has no sequences");

  const auto evals = forward_split(model, dataset, starts, T, mode);

  EvalReport report;
  report.T = T;
  Vec pos_errors;
  Vec ang_errors;
  for (std::size_t s = 0; s < evals.size(); ++s) {
    for (int t = 0; t < T; ++t) {
      const int frame = starts[s] + t;
      const Pose& truth = dataset.poses[frame];
      const PosePrediction& pred = evals[s].predictions[t];

      PathRow row;
      row.frame = frame;
      row.truth = truth;
      row.predicted_position = pred.position;
      double ang = 180.0;  // zero-norm prediction scores the worst case
      if (norm(pred.raw_orientation) > 1e-12) {
        row.predicted_orientation = normalize(pred.raw_orientation);
        ang = angular_error_deg(row.predicted_orientation, truth.orientation);
      } else {
        row.predicted_orientation = Quaternion{0.0, 0.0, 0.0, 0.0};
      }
      pos_errors.push_back(position_error_m(pred.position, truth.position));
      ang_errors.push_back(ang);
      report.path.push_back(row);

      GateRow gate;
      gate.frame = frame;
      gate.median_input = median_of(evals[s].gates.input_gate[t]);
      gate.median_forget = median_of(evals[s].gates.forget_gate[t]);
      gate.median_output = median_of(evals[s].gates.output_gate[t]);
      report.gates.push_back(gate);
    }
  }
  report.n_frames = static_cast<int>(pos_errors.size());
  report.median_position_m = median(pos_errors);
  report.median_orientation_deg = median(ang_errors);
  return report;
}

double mean_position_jump(const EvalReport& report) {
  // path rows are window-major, T consecutive frames per window.
  double sum = 0.0;
  int count = 0;
  for (std::size_t k = 1; k < report.path.size(); ++k) {
    if (k % report.T == 0) continue;  // first frame of the next window
    sum += norm(report.path[k].predicted_position - report.path[k - 1].predicted_position);
    ++count;
  }
  return count > 0 ? sum / count : 0.0;
}

void write_train_log(const std::filesystem::path& path, const std::vector<LossBreakdown>& log) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write train log: " + path.string());
  os << "step,position,orientation,weight_decay,temporal,total\n";
  for (std::size_t i = 0; i < log.size(); ++i)
    os << i << ',' << fmt_g9(log[i].position_term) << ',' << fmt_g9(log[i].orientation_term)
       << ',' << fmt_g9(log[i].weight_decay_term) << ',' << fmt_g9(log[i].temporal_term) << ','
       << fmt_g9(log[i].total) << "\n";
}

void write_eval_outputs(const std::filesystem::path& out_dir, const EvalReport& report) {
  std::filesystem::create_directories(out_dir);

  {
    nlohmann::json j = {{"median_position_m", report.median_position_m},
                        {"median_orientation_deg", report.median_orientation_deg},
                        {"n_frames", report.n_frames}};
    std::ofstream os(out_dir / "eval_report.json");
    if (!os) throw IoError("cannot write eval_report.json");
    os << j.dump(2) << "\n";
  }
  {
    std::ofstream os(out_dir / "path.csv");
    if (!os) throw IoError("cannot write path.csv");
    os << "frame,gt_px,gt_py,gt_pz,gt_qw,gt_qx,gt_qy,gt_qz,"
          "pred_px,pred_py,pred_pz,pred_qw,pred_qx,pred_qy,pred_qz\n";
    for (const PathRow& r : report.path) {
      os << r.frame << ',' << fmt_g9(r.truth.position.x) << ',' << fmt_g9(r.truth.position.y)
         << ',' << fmt_g9(r.truth.position.z) << ',' << fmt_g9(r.truth.orientation.w) << ','
         << fmt_g9(r.truth.orientation.x) << ',' << fmt_g9(r.truth.orientation.y) << ','
         << fmt_g9(r.truth.orientation.z) << ',' << fmt_g9(r.predicted_position.x) << ','
         << fmt_g9(r.predicted_position.y) << ',' << fmt_g9(r.predicted_position.z) << ','
         << fmt_g9(r.predicted_orientation.w) << ',' << fmt_g9(r.predicted_orientation.x) << ','
         << fmt_g9(r.predicted_orientation.y) << ',' << fmt_g9(r.predicted_orientation.z)
         << "\n";
    }
  }
  {
    std::ofstream os(out_dir / "gates.csv");
    if (!os) throw IoError("cannot write gates.csv");
    os << "frame,median_input_gate,median_forget_gate,median_output_gate\n";
    for (const GateRow& g : report.gates)
      os << g.frame << ',' << fmt_g9(g.median_input) << ',' << fmt_g9(g.median_forget) << ','
         << fmt_g9(g.median_output) << "\n";
  }
  {
    std::ofstream os(out_dir / "path.svg", std::ios::binary);
    if (!os) throw IoError("cannot write path.svg");
    os << emit_path_svg(report);
  }
}

std::string emit_path_svg(const EvalReport& report) {
  if (report.path.empty()) throw EmptyListError("path plot needs at least one frame");

  constexpr double kWidth = 800.0;
  constexpr double kHeight = 600.0;
  constexpr double kMargin = 40.0;

  double min_x = report.path.front().truth.position.x;
  double max_x = min_x;
  double min_y = report.path.front().truth.position.y;
  double max_y = min_y;
  for (const PathRow& r : report.path) {
    for (const Vec3& p : {r.truth.position, r.predicted_position}) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
  }
  const double extent_x = std::max(max_x - min_x, 1e-9);
  const double extent_y = std::max(max_y - min_y, 1e-9);
  const double scale =
      std::min((kWidth - 2 * kMargin) / extent_x, (kHeight - 2 * kMargin) / extent_y);
  const double off_x = kMargin + 0.5 * ((kWidth - 2 * kMargin) - scale * extent_x);
  const double off_y = kMargin + 0.5 * ((kHeight - 2 * kMargin) - scale * extent_y);

  auto to_px = [&](const Vec3& p) {
    const double u = off_x + (p.x - min_x) * scale;
    const double v = kHeight - (off_y + (p.y - min_y) * scale);
    return std::pair<double, double>(u, v);
  };
  auto fmt2 = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Grey marker at the first frame of every sequence window.
  for (std::size_t k = 0; k < report.path.size(); k += report.T) {
    const auto [u, v] = to_px(report.path[k].truth.position);
    svg << "<line x1=\"" << fmt2(u) << "\" y1=\"" << fmt2(v - 8.0) << "\" x2=\"" << fmt2(u)
        << "\" y2=\"" << fmt2(v + 8.0) << "\" stroke=\"#999999\" stroke-width=\"1\"/>\n";
  }

  auto polyline = [&](auto get_point, const char* color) {
    if (report.path.size() == 1) {
      const auto [u, v] = to_px(get_point(report.path.front()));
      svg << "<circle cx=\"" << fmt2(u) << "\" cy=\"" << fmt2(v) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
      return;
    }
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < report.path.size(); ++k) {
      const auto [u, v] = to_px(get_point(report.path[k]));
      if (k) svg << ' ';
      svg << fmt2(u) << ',' << fmt2(v);
    }
    svg << "\"/>\n";
  };
  polyline([](const PathRow& r) { return r.truth.position; }, "red");
  polyline([](const PathRow& r) { return r.predicted_position; }, "blue");

  svg << "</svg>\n";
  return svg.str();
}

std::vector<SweepRow> sweep_t(const GenConfig& gen, const TrainConfig& base,
                              std::span<const int> t_values, ExecMode mode) {
  if (t_values.empty()) throw ConfigError("sweep needs at least one T value");
  std::vector<SweepRow> rows;
  for (int T : t_values) {
    GenConfig g = gen;
    g.T = T;
    TrainConfig c = base;
    c.T = T;
    const Dataset ds = generate_dataset(g, mode);
    const TrainResult tr = train(c, ds, mode);
    const EvalReport report = evaluate(tr.checkpoint.model, ds, Split::Test, mode);
    rows.push_back({T, report.median_position_m, report.median_orientation_deg, report.n_frames});
  }
  return rows;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write sweep csv: " + path.string());
  os << "T,median_position_m,median_orientation_deg,n_frames\n";
  for (const SweepRow& r : rows)
    os << r.T << ',' << fmt_g9(r.median_position_m) << ',' << fmt_g9(r.median_orientation_deg)
       << ',' << r.n_frames << "\n";
}

std::vector<FovRow> compare_fov(const GenConfig& base_gen, const TrainConfig& base_train,
                                std::span<const std::pair<CameraModel, double>> fov_specs,
                                ExecMode mode) {
  if (fov_specs.empty()) throw ConfigError("compare_fov needs at least one optic");

  auto run_variant = [&](const GenConfig& g, const TrainConfig& c) {
    const Dataset ds = generate_dataset(g, mode);
    const TrainResult tr = train(c, ds, mode);
    const EvalReport report = evaluate(tr.checkpoint.model, ds, Split::Test, mode);
    return FovVariantResult{report.median_position_m, report.median_orientation_deg};
  };

  std::vector<FovRow> rows;
  for (const auto& [model, fov_deg] : fov_specs) {
    GenConfig g = base_gen;
    g.model = model;
    g.fov_deg = fov_deg;

    FovRow row;
    row.optic = to_string(model);
    row.fov_deg = fov_deg;

    GenConfig g1 = g;
    g1.T = 1;
    TrainConfig c1 = base_train;
    c1.T = 1;
    c1.delta = 0.0;
    row.single_frame = run_variant(g1, c1);

    TrainConfig c2 = base_train;
    c2.delta = 0.0;
    GenConfig g2 = g;
    g2.T = base_train.T;
    row.lstm = run_variant(g2, c2);

    TrainConfig c3 = base_train;
    row.lstm_reg = run_variant(g2, c3);

    rows.push_back(row);
  }
  return rows;
}

void write_fov_csv(const std::filesystem::path& path, const std::vector<FovRow>& rows) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write fov csv: " + path.string());
  os << "optic,fov_deg,single_frame_pos_m,single_frame_deg,lstm_pos_m,lstm_deg,"
        "lstm_reg_pos_m,lstm_reg_deg\n";
  for (const FovRow& r : rows)
    os << r.optic << ',' << fmt_g9(r.fov_deg) << ',' << fmt_g9(r.single_frame.median_position_m)
       << ',' << fmt_g9(r.single_frame.median_orientation_deg) << ','
       << fmt_g9(r.lstm.median_position_m) << ',' << fmt_g9(r.lstm.median_orientation_deg) << ','
       << fmt_g9(r.lstm_reg.median_position_m) << ','
       << fmt_g9(r.lstm_reg.median_orientation_deg) << "\n";
}

}  // namespace seqloc
