// Command-line front end: dataset generation, training, evaluation, and the
// experiment drivers, all over the documented file formats.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "seqloc/errors.hpp"
#include "seqloc/gradcheck.hpp"
#include "seqloc/trainer.hpp"

namespace fs = std::filesystem;
using namespace seqloc;

namespace {

struct DataSpec {
  GenConfig gen;
  TrainConfig train;
};

// {"gen": {...}, "train": {...}}, both sections optional.
DataSpec load_data_spec(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read data spec: " + path.string());
  nlohmann::json j;
  is >> j;
  for (const auto& [key, value] : j.items())
    if (key != "gen" && key != "train") throw ConfigError("unknown data spec key: " + key);
  DataSpec spec;
  if (j.contains("gen")) spec.gen = gen_config_from_json_text(j.at("gen").dump());
  if (j.contains("train"))
    spec.train = train_config_from_json_text(j.at("train").dump());
  else
    spec.train.epochs = 50;
  return spec;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> values;
  std::string token;
  std::stringstream ss(text);
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    values.push_back(std::stoi(token));
  }
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sequence pose regression over synthetic multi-FoV scenes"};
  app.require_subcommand(1);
  bool serial = false;
  app.add_flag("--serial", serial, "run the serial reference kernels instead of OpenMP");

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "build a synthetic dataset directory");
  std::string gen_config_path, gen_out;
  gen_cmd->add_option("--config", gen_config_path, "dataset config JSON")->required();
  gen_cmd->add_option("--out", gen_out, "output directory")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model on a dataset directory");
  std::string train_data, train_config_path, train_out, train_log = "train_log.csv";
  train_cmd->add_option("--data", train_data, "dataset directory")->required();
  train_cmd->add_option("--config", train_config_path, "train config JSON")->required();
  train_cmd->add_option("--out", train_out, "checkpoint output path")->required();
  train_cmd->add_option("--log", train_log, "training log CSV path");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
  std::string eval_data, eval_ckpt, eval_split = "test", eval_out_dir;
  eval_cmd->add_option("--data", eval_data, "dataset directory")->required();
  eval_cmd->add_option("--ckpt", eval_ckpt, "checkpoint path")->required();
  eval_cmd->add_option("--split", eval_split, "train or test")
      ->check(CLI::IsMember({"train", "test"}));
  eval_cmd->add_option("--out-dir", eval_out_dir, "report output directory")->required();

  // sweep-t
  auto* sweep_cmd = app.add_subcommand("sweep-t", "train and evaluate across sequence lengths");
  std::string sweep_spec, sweep_t_list = "2,3,4,5,10", sweep_out;
  sweep_cmd->add_option("--data-spec", sweep_spec, "JSON with gen/train sections")->required();
  sweep_cmd->add_option("--t", sweep_t_list, "comma-separated T values");
  sweep_cmd->add_option("--out", sweep_out, "output CSV")->required();

  // compare-fov
  auto* fov_cmd = app.add_subcommand("compare-fov",
                                     "three optics x three training variants on one scene");
  std::uint64_t fov_seed = 1;
  std::string fov_out, fov_spec;
  fov_cmd->add_option("--scene-seed", fov_seed, "seed for scene and trajectory")->required();
  fov_cmd->add_option("--out", fov_out, "output CSV")->required();
  fov_cmd->add_option("--config", fov_spec, "optional data spec JSON overriding the defaults");

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  int grad_trials = 20;
  grad_cmd->add_option("--trials", grad_trials, "number of random instances");

  CLI11_PARSE(app, argc, argv);
  const ExecMode mode = serial ? ExecMode::Serial : ExecMode::Parallel;

  try {
    if (*gen_cmd) {
      const GenConfig config = gen_config_from_json_file(gen_config_path);
      const Dataset ds = generate_dataset(config, mode);
      save_dataset(ds, gen_out);
      std::cout << "wrote " << ds.poses.size() << " frames ("
                << ds.sequence_starts(Split::Train).size() << " train / "
                << ds.sequence_starts(Split::Test).size() << " test sequences) to " << gen_out
                << "\n";
    } else if (*train_cmd) {
      const Dataset ds = load_dataset(train_data);
      const TrainConfig config = train_config_from_json_file(train_config_path);
      const TrainResult result = train(config, ds, mode);
      save_checkpoint(train_out, result.checkpoint);
      write_train_log(train_log, result.log);
      std::cout << "trained " << result.log.size() << " steps (beta "
                << result.checkpoint.beta << "), checkpoint " << train_out << ", log "
                << train_log << "\n";
      if (!result.log.empty())
        std::cout << "final loss " << result.log.back().total << "\n";
    } else if (*eval_cmd) {
      const Dataset ds = load_dataset(eval_data);
      const Checkpoint ckpt = load_checkpoint(eval_ckpt);
      const Split split = eval_split == "train" ? Split::Train : Split::Test;
      const EvalReport report = evaluate(ckpt.model, ds, split, mode);
      write_eval_outputs(eval_out_dir, report);
      std::cout << "median position error " << report.median_position_m
                << " m, median orientation error " << report.median_orientation_deg
                << " deg over " << report.n_frames << " frames\n";
    } else if (*sweep_cmd) {
      const DataSpec spec = load_data_spec(sweep_spec);
      const std::vector<int> ts = parse_int_list(sweep_t_list);
      const auto rows = sweep_t(spec.gen, spec.train, ts, mode);
      write_sweep_csv(sweep_out, rows);
      std::cout << "wrote " << rows.size() << " rows to " << sweep_out << "\n";
    } else if (*fov_cmd) {
      DataSpec spec;
      if (!fov_spec.empty()) spec = load_data_spec(fov_spec);
      else spec.train.epochs = 50;
      spec.gen.seed = fov_seed;
      const std::vector<std::pair<CameraModel, double>> optics{
          {CameraModel::Perspective, 90.0},
          {CameraModel::FisheyeEquidistant, 130.0},
          {CameraModel::FisheyeEquidistant, 180.0}};
      const auto rows = compare_fov(spec.gen, spec.train, optics, mode);
      write_fov_csv(fov_out, rows);
      std::cout << "wrote " << rows.size() << " rows to " << fov_out << "\n";
    } else if (*grad_cmd) {
      const GradCheckResult result = run_gradcheck(grad_trials, std::cout);
      return result.passed() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
