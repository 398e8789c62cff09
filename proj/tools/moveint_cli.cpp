#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "moveint/dataset.hpp"
#include "moveint/evaluation.hpp"
#include "moveint/gmr.hpp"
#include "moveint/inference.hpp"
#include "moveint/model.hpp"
#include "moveint/plot.hpp"
#include "moveint/training.hpp"

namespace fs = std::filesystem;
using namespace moveint;

namespace {

struct TrainArgs {
  std::string data;
  std::string out = "out";
  int latent_dim = 5;
  int n_components = 3;
  int hidden1 = 40;
  int hidden2 = 20;
  int recurrent_dim = 20;
  train::TrainConfig cfg;
};

ModelConfig derive_model_config(const data::DatasetSplit& dataset, const TrainArgs& args) {
  const auto& traj = dataset.train.empty() ? dataset.test.front() : dataset.train.front();
  const data::WindowedPair win = data::build_windows(traj, dataset.feature_spec());
  ModelConfig mc;
  mc.human_dim = static_cast<int>(win.human.cols());
  mc.robot_dim = static_cast<int>(win.robot.cols());
  mc.latent_dim = args.latent_dim;
  mc.n_components = args.n_components;
  mc.hidden1 = args.hidden1;
  mc.hidden2 = args.hidden2;
  mc.recurrent_dim = args.recurrent_dim;
  return mc;
}

data::Units dataset_units(const data::DatasetSplit& dataset) {
  const auto& trajs = dataset.train.empty() ? dataset.test : dataset.train;
  return trajs.front().units;
}

int run_synth(const data::SynthConfig& cfg, std::uint64_t seed, const std::string& out) {
  const data::DatasetSplit split = data::synth_interaction_dataset(cfg, seed);
  data::save_dataset(split, out);
  std::cout << "wrote " << split.train.size() << " train / " << split.test.size()
            << " test trajectories to " << out << "\n";
  return 0;
}

int run_prepare(const std::string& input, const std::string& out,
                std::optional<double> target_hz, const data::FeatureSpec& spec) {
  data::DatasetSplit split = data::load_dataset(input);
  nlohmann::json entries = nlohmann::json::array();
  auto process = [&](std::vector<data::TrajectoryPair>& trajs, const char* split_name) {
    int i = 0;
    for (auto& traj : trajs) {
      if (target_hz) traj = data::downsample(traj, *target_hz);
      nlohmann::json e = {{"path", std::string("traj_") + split_name + "_" + std::to_string(i++) +
                                       ".mvtr"},
                          {"frame_rate", traj.frame_rate},
                          {"units", data::units_to_string(traj.units)},
                          {"split", split_name}};
      if (traj.action_label) e["action_label"] = *traj.action_label;
      if (traj.mode >= 0) e["mode"] = traj.mode;
      entries.push_back(e);
    }
  };
  process(split.train, "train");
  process(split.test, "test");

  nlohmann::json provenance = {{"type", "ingest"}, {"source", input}};
  if (target_hz) provenance["downsampled_to_hz"] = *target_hz;
  split.manifest = {{"format", "moveint-dataset-v1"},
                    {"feature_spec", spec.to_json()},
                    {"generator", provenance},
                    {"trajectories", entries}};
  data::save_dataset(split, out);
  std::cout << "prepared " << split.train.size() << " train / " << split.test.size()
            << " test trajectories into " << out << "\n";
  return 0;
}

int run_train(const TrainArgs& args) {
  const data::DatasetSplit dataset = data::load_dataset(args.data);
  const ModelConfig mc = derive_model_config(dataset, args);

  const train::TrainResult result = train::train(dataset, mc, args.cfg);

  fs::create_directories(fs::path(args.out) / "checkpoints");
  fs::create_directories(fs::path(args.out) / "logs");
  const nlohmann::json meta = {
      {"manifest_hash", data::manifest_hash(dataset.manifest)},
      {"train_config", args.cfg.to_json()},
      {"units", data::units_to_string(dataset_units(dataset))},
      {"feature_spec", dataset.feature_spec().to_json()}};
  const fs::path ckpt_path = fs::path(args.out) / "checkpoints" / "model.mvck";
  train::save_checkpoint(ckpt_path, result.config, result.params, meta);
  train::write_training_log_csv(fs::path(args.out) / "logs" / "train_log.csv", result.log);

  if (result.diverged) {
    std::cerr << "training diverged: " << result.diagnostic << " (last-good checkpoint at "
              << ckpt_path << ")\n";
    return 1;
  }
  std::cout << "checkpoint written to " << ckpt_path << "\n";
  if (!result.log.empty())
    std::cout << "final loss " << result.log.back().loss.total << " after "
              << result.log.back().step << " steps\n";
  return 0;
}

int run_eval(const std::string& data_path, const std::string& ckpt_path, const std::string& out,
             bool with_baseline) {
  const data::DatasetSplit dataset = data::load_dataset(data_path);
  const train::Checkpoint ckpt = train::load_checkpoint(ckpt_path);
  const MoVEIntModel model = train::model_from_checkpoint(ckpt);
  const data::Units units =
      data::units_from_string(ckpt.meta.value("units", data::units_to_string(dataset_units(dataset))));

  const auto rows = eval::mse_report(model, dataset, units);
  fs::create_directories(fs::path(out) / "reports");
  eval::write_mse_csv(fs::path(out) / "reports" / "mse.csv", rows);
  std::cout << eval::format_mse_table(rows);
  if (with_baseline) {
    const auto base = eval::baseline_mse(dataset);
    eval::write_mse_csv(fs::path(out) / "reports" / "mse_baseline.csv", base);
    std::cout << "constant-mean baseline:\n" << eval::format_mse_table(base);
  }
  return 0;
}

int run_rollout(const std::string& data_path, const std::string& ckpt_path,
                const std::string& out) {
  const data::DatasetSplit dataset = data::load_dataset(data_path);
  const train::Checkpoint ckpt = train::load_checkpoint(ckpt_path);
  const MoVEIntModel model = train::model_from_checkpoint(ckpt);
  const data::FeatureSpec spec = dataset.feature_spec();

  fs::create_directories(out);
  std::uint64_t stream_id = 0;
  int i = 0;
  for (const auto& traj : dataset.test) {
    const infer::RolloutResult roll = infer::rollout_trajectory(model, traj, spec, stream_id++);
    data::TrajectoryPair pred = traj;
    pred.robot_frames = roll.executed_frames;
    data::save_trajectory(fs::path(out) / ("pred_" + std::to_string(i) + ".mvtr"), pred);

    data::TrajectoryPair alphas;
    alphas.human_frames = MatrixXd(roll.alpha_trace.rows(), 0);
    alphas.robot_frames = roll.alpha_trace;
    alphas.frame_rate = traj.frame_rate;
    alphas.units = traj.units;
    data::save_trajectory(fs::path(out) / ("alphas_" + std::to_string(i) + ".mvtr"), alphas);
    ++i;
  }
  std::cout << "wrote " << i << " rollouts to " << out << "\n";
  return 0;
}

int run_plot(const std::string& data_path, const std::string& ckpt_path, const std::string& out,
             int count) {
  const data::DatasetSplit dataset = data::load_dataset(data_path);
  const train::Checkpoint ckpt = train::load_checkpoint(ckpt_path);
  const MoVEIntModel model = train::model_from_checkpoint(ckpt);
  const data::FeatureSpec spec = dataset.feature_spec();

  fs::create_directories(out);
  const int n = std::min<int>(count, static_cast<int>(dataset.test.size()));
  for (int i = 0; i < n; ++i) {
    const auto& traj = dataset.test[i];
    const infer::RolloutResult roll = infer::rollout_trajectory(model, traj, spec, i);

    const int d_r = static_cast<int>(traj.robot_frames.cols());
    const int frame_dim = spec.robot_velocities ? 2 * d_r : d_r;
    std::vector<plot::Series> series;
    series.push_back({traj.human_frames, "red", "human (observed)"});
    series.push_back({traj.robot_frames, "black", "robot (ground truth)"});
    series.push_back({roll.executed_frames, "blue", "robot (generated)"});
    for (int c = 0; c < model.config().n_components; ++c) {
      MatrixXd frames(roll.component_windows[c].rows(), d_r);
      for (Eigen::Index t = 0; t < frames.rows(); ++t)
        frames.row(t) = infer::executed_action(roll.component_windows[c].row(t).transpose(),
                                               frame_dim, d_r)
                            .transpose();
      const auto& palette = plot::component_palette();
      series.push_back({frames, palette[c % palette.size()],
                        "component " + std::to_string(c) + " (decoded)"});
    }
    plot::write_trajectory_svg(fs::path(out) / ("trajectory_" + std::to_string(i) + ".svg"),
                               series);
    plot::write_alpha_svg(fs::path(out) / ("alphas_" + std::to_string(i) + ".svg"),
                          roll.alpha_trace);
  }
  std::cout << "wrote " << n << " trajectory/alpha plot pairs to " << out << "\n";
  return 0;
}

int run_oracle_check(std::uint64_t seed, int cases) {
  const gmr::OracleReport report = gmr::run_oracle_suite(seed, cases);
  std::printf("cases: %d\n", report.cases);
  std::printf("max covariance-identity residual: %.3e\n", report.max_identity_residual);
  std::printf("max mean-affinity residual:       %.3e\n", report.max_affinity_residual);
  std::printf("max covariance asymmetry:         %.3e\n", report.max_symmetry_residual);
  std::printf("min conditional-cov eigenvalue:   %.3e\n", report.min_eigenvalue);
  std::printf("max forward simplex residual:     %.3e\n", report.max_simplex_residual);
  const bool ok = report.max_identity_residual < 1e-8 && report.max_affinity_residual < 1e-8 &&
                  report.max_symmetry_residual < 1e-10 && report.min_eigenvalue > -1e-9 &&
                  report.max_simplex_residual < 1e-12;
  std::printf("%s\n", ok ? "OK" : "FAILED");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reactive human-robot motion generation: mixture-density latent policies "
               "over a robot-motion VAE, with an exact GMR reference"};
  app.require_subcommand(1);

  // synth
  data::SynthConfig synth_cfg;
  std::uint64_t synth_seed = 0;
  std::string synth_out = "synth_data";
  auto* synth = app.add_subcommand("synth", "generate a synthetic interaction dataset");
  synth->add_option("--modes", synth_cfg.modes, "number of interaction modes");
  synth->add_option("--train", synth_cfg.train_count, "training trajectories");
  synth->add_option("--test", synth_cfg.test_count, "test trajectories");
  synth->add_option("--length", synth_cfg.length, "frames per trajectory");
  synth->add_option("--noise", synth_cfg.noise, "coupling noise std");
  synth->add_option("--mode-offset", synth_cfg.mode_offset, "spatial offset between mode centers");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--out", synth_out, "output directory");

  // prepare-data
  std::string prep_input, prep_out = "prepared_data";
  double prep_hz = 0.0;
  data::FeatureSpec prep_spec;
  auto* prep = app.add_subcommand("prepare-data", "ingest, downsample and window a dataset");
  prep->add_option("--input", prep_input, "input manifest or dataset directory")->required();
  prep->add_option("--out", prep_out, "output directory");
  prep->add_option("--target-hz", prep_hz, "downsample to this rate (0 keeps the source rate)");
  prep->add_option("--window", prep_spec.window, "observation window length");
  prep->add_flag("--human-velocities,!--no-human-velocities", prep_spec.human_velocities,
                 "append human velocity features");
  prep->add_flag("--robot-velocities,!--no-robot-velocities", prep_spec.robot_velocities,
                 "append robot velocity features");
  prep->add_option("--human-origin-joint", prep_spec.human_origin_joint,
                   "recenter human positions on this joint (-1 disables)");
  prep->add_option("--robot-origin-joint", prep_spec.robot_origin_joint,
                   "recenter robot positions on this joint (-1 disables)");

  // train
  TrainArgs train_args;
  auto* tr = app.add_subcommand("train", "train a model on a prepared dataset");
  tr->set_config("--config", "", "key-value config file; command-line flags override it");
  tr->add_option("--data", train_args.data, "dataset manifest or directory")->required();
  tr->add_option("--out", train_args.out, "output directory (checkpoints/, logs/)");
  tr->add_option("--latent-dim", train_args.latent_dim, "latent dimensionality");
  tr->add_option("--components", train_args.n_components, "mixture components");
  tr->add_option("--hidden1", train_args.hidden1, "first hidden width");
  tr->add_option("--hidden2", train_args.hidden2, "second hidden width");
  tr->add_option("--recurrent-dim", train_args.recurrent_dim, "GRU state width");
  tr->add_option("--epochs", train_args.cfg.epochs, "epoch budget");
  tr->add_option("--beta", train_args.cfg.beta, "KL / separation weight");
  tr->add_option("--n-samples", train_args.cfg.n_samples, "Monte-Carlo samples per term");
  tr->add_option("--step-size", train_args.cfg.step_size, "optimizer step size");
  tr->add_option("--seed", train_args.cfg.seed, "training seed");
  tr->add_option("--init-checkpoint", train_args.cfg.init_checkpoint, "warm-start checkpoint");
  tr->add_option("--clip-norm", train_args.cfg.clip_norm, "gradient norm clip (0 disables)");
  tr->add_option("--log-interval", train_args.cfg.log_interval, "steps between log rows");
  tr->add_flag("--shuffle", train_args.cfg.shuffle, "shuffle trajectory order per epoch");
  tr->add_option("--early-stop-patience", train_args.cfg.early_stop_patience,
                 "epochs without improvement before stopping (0 disables)");
  tr->add_flag("--separation,!--no-separation", train_args.cfg.separation_enabled,
               "include the mode-separation terms in the loss");

  // eval
  std::string eval_data, eval_ckpt, eval_out = "out";
  bool eval_baseline = false;
  auto* ev = app.add_subcommand("eval", "prediction MSE report on the test split");
  ev->add_option("--data", eval_data, "dataset manifest or directory")->required();
  ev->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
  ev->add_option("--out", eval_out, "output directory (reports/)");
  ev->add_flag("--with-baseline", eval_baseline, "also report the constant-mean baseline");

  // rollout
  std::string roll_data, roll_ckpt, roll_out = "rollouts";
  auto* ro = app.add_subcommand("rollout", "generate robot trajectories and alpha traces");
  ro->add_option("--data", roll_data, "dataset manifest or directory")->required();
  ro->add_option("--checkpoint", roll_ckpt, "model checkpoint")->required();
  ro->add_option("--out", roll_out, "output directory");

  // plot
  std::string plot_data, plot_ckpt, plot_out = "plots";
  int plot_count = 4;
  auto* pl = app.add_subcommand("plot", "static SVG plots of rollouts and alpha progressions");
  pl->add_option("--data", plot_data, "dataset manifest or directory")->required();
  pl->add_option("--checkpoint", plot_ckpt, "model checkpoint")->required();
  pl->add_option("--out", plot_out, "output directory");
  pl->add_option("--count", plot_count, "number of test trajectories to plot");

  // oracle-check
  std::uint64_t oracle_seed = 0;
  int oracle_cases = 1000;
  auto* oc = app.add_subcommand("oracle-check", "randomized GMR/HMM property sweep");
  oc->add_option("--seed", oracle_seed, "sweep seed");
  oc->add_option("--cases", oracle_cases, "number of random mixtures");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return run_synth(synth_cfg, synth_seed, synth_out);
    if (prep->parsed())
      return run_prepare(prep_input, prep_out,
                         prep_hz > 0.0 ? std::optional<double>(prep_hz) : std::nullopt, prep_spec);
    if (tr->parsed()) return run_train(train_args);
    if (ev->parsed()) return run_eval(eval_data, eval_ckpt, eval_out, eval_baseline);
    if (ro->parsed()) return run_rollout(roll_data, roll_ckpt, roll_out);
    if (pl->parsed()) return run_plot(plot_data, plot_ckpt, plot_out, plot_count);
    if (oc->parsed()) return run_oracle_check(oracle_seed, oracle_cases);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
