#pragma once

#include <optional>
#include <vector>

#include "moveint/dataset.hpp"
#include "moveint/model.hpp"

namespace moveint::infer {

struct ReactiveOutput {
  VectorXd robot_window;                   // decoded combined-prior mean
  std::vector<VectorXd> component_windows; // each component mean decoded separately
  VectorXd alphas;
  MixtureDensity mixture;
  RecurrentState state;
};

// One reactive step: human window in, decoded robot window out, plus the
// per-component decodings used for visualization. Deterministic; when rng
// is given the latent is sampled from the combined prior instead of using
// its mean.
ReactiveOutput reactive_step(const MoVEIntModel& model, const VectorXd& human_window,
                             const RecurrentState& state, Rng* rng = nullptr);

// Newest frame of a decoded window (its trailing feature block); the action
// handed to a controller is that frame's leading position_dim entries.
VectorXd executed_action(const VectorXd& robot_window, int frame_feature_dim, int position_dim);

struct RolloutResult {
  MatrixXd robot_windows;                   // T x (W * D_r)
  MatrixXd alpha_trace;                     // T x N, each row a simplex
  std::vector<MatrixXd> component_windows;  // N matrices, T x (W * D_r)
  MatrixXd executed_frames;                 // T x position_dim, newest frame per window
};

// Streams a human window sequence through a fresh recurrent state.
RolloutResult rollout(const MoVEIntModel& model, const MatrixXd& human_windows,
                      std::uint64_t stream_id, int frame_feature_dim, int position_dim,
                      Rng* rng = nullptr);

// Convenience wrapper: windows the human side of a trajectory per the
// feature spec, then rolls out.
RolloutResult rollout_trajectory(const MoVEIntModel& model, const data::TrajectoryPair& traj,
                                 const data::FeatureSpec& spec, std::uint64_t stream_id);

}  // namespace moveint::infer
