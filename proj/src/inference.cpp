#include "moveint/inference.hpp"

#include <stdexcept>

namespace moveint::infer {

ReactiveOutput reactive_step(const MoVEIntModel& model, const VectorXd& human_window,
                             const RecurrentState& state, Rng* rng) {
  auto [mixture, next] = model.mdn_step(human_window, state);
  const DiagonalGaussian prior = combine_mixture(mixture);
  const VectorXd latent = rng != nullptr ? prior.sample(*rng) : prior.mean;

  ReactiveOutput out;
  out.robot_window = model.decode_robot(latent);
  for (const auto& c : mixture.components) out.component_windows.push_back(model.decode_robot(c.mean));
  out.alphas = mixture.alphas;
  out.mixture = std::move(mixture);
  out.state = std::move(next);
  return out;
}

VectorXd executed_action(const VectorXd& robot_window, int frame_feature_dim, int position_dim) {
  if (frame_feature_dim < 1 || robot_window.size() % frame_feature_dim != 0)
    throw std::invalid_argument("executed_action: window is not a whole number of frames");
  if (position_dim < 1 || position_dim > frame_feature_dim)
    throw std::invalid_argument("executed_action: bad position_dim");
  return robot_window.tail(frame_feature_dim).head(position_dim);
}

RolloutResult rollout(const MoVEIntModel& model, const MatrixXd& human_windows,
                      std::uint64_t stream_id, int frame_feature_dim, int position_dim,
                      Rng* rng) {
  const Eigen::Index steps = human_windows.rows();
  if (steps == 0) throw std::invalid_argument("rollout: empty trajectory");
  const auto& cfg = model.config();

  RolloutResult out;
  out.robot_windows.resize(steps, cfg.robot_dim);
  out.alpha_trace.resize(steps, cfg.n_components);
  out.component_windows.assign(cfg.n_components, MatrixXd(steps, cfg.robot_dim));
  out.executed_frames.resize(steps, position_dim);

  RecurrentState state = model.initial_state(stream_id);
  for (Eigen::Index t = 0; t < steps; ++t) {
    check_stream(state, stream_id, static_cast<int>(t));
    ReactiveOutput step = reactive_step(model, human_windows.row(t).transpose(), state, rng);
    out.robot_windows.row(t) = step.robot_window.transpose();
    out.alpha_trace.row(t) = step.alphas.transpose();
    for (int i = 0; i < cfg.n_components; ++i)
      out.component_windows[i].row(t) = step.component_windows[i].transpose();
    out.executed_frames.row(t) =
        executed_action(step.robot_window, frame_feature_dim, position_dim).transpose();
    state = std::move(step.state);
  }
  return out;
}

RolloutResult rollout_trajectory(const MoVEIntModel& model, const data::TrajectoryPair& traj,
                                 const data::FeatureSpec& spec, std::uint64_t stream_id) {
  const MatrixXd features =
      data::assemble_features(traj.human_frames, spec.human_velocities, spec.human_origin_joint);
  const MatrixXd windows = data::window_matrix(features, spec.window);
  const int position_dim = static_cast<int>(traj.robot_frames.cols());
  const int frame_dim = spec.robot_velocities ? 2 * position_dim : position_dim;
  return rollout(model, windows, stream_id, frame_dim, position_dim);
}

}  // namespace moveint::infer
