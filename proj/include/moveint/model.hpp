#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "moveint/autodiff.hpp"
#include "moveint/common.hpp"

namespace moveint {

// Diagonal Gaussian parameterized by mean and log standard deviation.
// log_std is stored clamped to [-10, 3]; the effective deviation carries a
// 1e-6 floor: std = exp(log_std) + 1e-6.
struct DiagonalGaussian {
  static constexpr double kLogStdMin = -10.0;
  static constexpr double kLogStdMax = 3.0;
  static constexpr double kStdFloor = 1e-6;

  VectorXd mean;
  VectorXd log_std;

  static DiagonalGaussian from_raw(VectorXd mean, VectorXd raw_log_std);
  static DiagonalGaussian from_moments(const VectorXd& mean, const VectorXd& variance);

  Eigen::Index dim() const { return mean.size(); }
  VectorXd stddev() const { return (log_std.array().exp() + kStdFloor).matrix(); }
  VectorXd variance() const { return stddev().array().square().matrix(); }
  VectorXd sample(Rng& rng) const;
};

struct MixtureDensity {
  std::vector<DiagonalGaussian> components;
  VectorXd alphas;

  int size() const { return static_cast<int>(components.size()); }
  void validate() const;  // alphas nonnegative, sum to 1 within 1e-6
};

// Moment-matched single Gaussian of a mixture: alpha-weighted mean and
// alpha-weighted component variance, no spread-of-means term.
DiagonalGaussian combine_mixture(const MixtureDensity& m);

struct RecurrentState {
  VectorXd hidden;
  std::uint64_t trajectory_id = 0;
  int step = 0;
};

// Throws std::logic_error when a state from another stream (or from the
// wrong timestep) is fed into a rollout.
void check_stream(const RecurrentState& state, std::uint64_t trajectory_id, int step);

struct ModelConfig {
  int human_dim = 90;  // flattened human observation window
  int robot_dim = 20;  // flattened robot window, also the decoder output size
  int latent_dim = 5;
  int n_components = 3;
  int hidden1 = 40;
  int hidden2 = 20;
  int recurrent_dim = 20;
  double leaky_slope = 0.01;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Robot-window VAE plus the recurrent mixture-density policy head over
// human windows. Parameters are plain tensors; forward passes are pure.
class MoVEIntModel {
 public:
  MoVEIntModel(ModelConfig config, std::uint64_t seed);
  MoVEIntModel(ModelConfig config, ad::ParamStore params);  // from checkpoint

  const ModelConfig& config() const { return config_; }
  ad::ParamStore& params() { return params_; }
  const ad::ParamStore& params() const { return params_; }

  // --- value-level API ---
  DiagonalGaussian encode_robot(const VectorXd& robot_window) const;
  VectorXd decode_robot(const VectorXd& latent) const;
  RecurrentState initial_state(std::uint64_t trajectory_id) const;
  std::pair<MixtureDensity, RecurrentState> mdn_step(const VectorXd& human_window,
                                                     const RecurrentState& state) const;

  // --- graph-level API (training and gradient checks) ---
  struct GaussNodes {
    ad::Value mean;
    ad::Value log_std;  // clamped
  };
  struct MixtureNodes {
    std::vector<GaussNodes> comps;
    ad::Value alphas;
    ad::Value hidden;  // advanced recurrent state
  };

  GaussNodes encode_nodes(ad::Graph& g, ad::Value robot_window) const;
  ad::Value decode_nodes(ad::Graph& g, ad::Value latent) const;
  MixtureNodes mdn_nodes(ad::Graph& g, ad::Value human_window, ad::Value hidden_prev) const;

  // std = exp(log_std) + 1e-6 as a graph op
  static ad::Value std_nodes(ad::Graph& g, ad::Value log_std);
  // combined prior per the mixture moment match; returns (mean, variance)
  static std::pair<ad::Value, ad::Value> combine_nodes(ad::Graph& g, const MixtureNodes& m);

 private:
  void init_params(std::uint64_t seed);

  ModelConfig config_;
  ad::ParamStore params_;

  // tensor indices, fixed at construction
  struct Slots {
    int enc_w1, enc_b1, enc_w2, enc_b2, enc_mu_w, enc_mu_b, enc_ls_w, enc_ls_b;
    int dec_w1, dec_b1, dec_w2, dec_b2, dec_out_w, dec_out_b;
    int mdn_w1, mdn_b1, mdn_w2, mdn_b2, mdn_mu_w, mdn_mu_b, mdn_ls_w, mdn_ls_b;
    int gru_w_ih, gru_b_ih, gru_w_hh, gru_b_hh;
    int alpha_w, alpha_b;
  } slots_{};
  void register_tensors();
};

}  // namespace moveint
