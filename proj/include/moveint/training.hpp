#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "moveint/dataset.hpp"
#include "moveint/losses.hpp"
#include "moveint/model.hpp"

namespace moveint::train {

struct TrainConfig {
  double beta = 0.005;
  int n_samples = 1;
  int epochs = 200;
  double step_size = 5e-4;
  std::uint64_t seed = 0;
  std::string init_checkpoint;  // warm start when non-empty
  double clip_norm = 1.0;
  int log_interval = 1;       // optimizer steps between log rows
  bool shuffle = false;       // seeded trajectory shuffling per epoch
  int early_stop_patience = 0;  // epochs without improvement; 0 disables
  bool separation_enabled = true;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// First-order adaptive-moment optimizer over a ParamStore.
class Adam {
 public:
  Adam(double step_size, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(step_size), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ad::ParamStore& params, const std::vector<MatrixXd>& grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<MatrixXd> m_, v_;
};

// Scales gradients in place to the given global norm; returns the pre-clip
// norm.
double clip_gradients(std::vector<MatrixXd>& grads, double max_norm);

struct LogRow {
  int epoch = 0;
  int step = 0;
  int trajectory = 0;
  losses::LossBreakdown loss;
  double wall_ms = 0.0;
};

struct TrainResult {
  ModelConfig config;
  ad::ParamStore params;
  std::vector<LogRow> log;
  bool diverged = false;
  std::string diagnostic;

  MoVEIntModel model() const { return MoVEIntModel(config, params); }
};

// Trajectory-sequential training: one optimizer step per trajectory, fresh
// recurrent state each trajectory, deterministic given config.seed.
TrainResult train(const data::DatasetSplit& dataset, const ModelConfig& model_config,
                  const TrainConfig& train_config);

struct Checkpoint {
  ModelConfig config;
  ad::ParamStore params;
  nlohmann::json meta;  // manifest hash, train config, dataset units, ...
};

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const ad::ParamStore& params, const nlohmann::json& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Instantiates the model, enforcing config compatibility when the caller
// requests a specific configuration.
MoVEIntModel model_from_checkpoint(const Checkpoint& ckpt,
                                   const std::optional<ModelConfig>& requested = std::nullopt);

void write_training_log_csv(const std::filesystem::path& path, const std::vector<LogRow>& rows);

}  // namespace moveint::train
