#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "moveint/common.hpp"

namespace moveint::data {

enum class Units { meters, radians };

std::string units_to_string(Units u);
Units units_from_string(const std::string& s);

// One time-aligned demonstration: T human frames against T robot frames.
struct TrajectoryPair {
  MatrixXd human_frames;  // T x D_h
  MatrixXd robot_frames;  // T x D_r
  double frame_rate = 0.0;
  std::optional<std::string> action_label;  // metadata only, never a model input
  Units units = Units::meters;
  int mode = -1;  // synthetic generating mode, -1 when unknown

  Eigen::Index length() const { return human_frames.rows(); }
  void validate() const;
};

// Flat stack of W consecutive frames, the per-timestep network input.
struct ObservationWindow {
  VectorXd features;  // length W * D, oldest frame first
  int t_index = 0;
};

// How raw frames become model inputs. Stored in the manifest so every
// dataset states explicitly whether velocities are appended per stream.
struct FeatureSpec {
  int window = 5;
  bool human_velocities = true;
  bool robot_velocities = false;
  int human_origin_joint = -1;  // joint index recentered to the origin, -1 = off
  int robot_origin_joint = -1;

  nlohmann::json to_json() const;
  static FeatureSpec from_json(const nlohmann::json& j);
};

struct DatasetSplit {
  std::vector<TrajectoryPair> train;
  std::vector<TrajectoryPair> test;
  nlohmann::json manifest;  // provenance: sources, downsampling, seed, feature_spec

  FeatureSpec feature_spec() const { return FeatureSpec::from_json(manifest.at("feature_spec")); }
};

// Uniform-stride decimation to target_hz; the first frame is always kept.
TrajectoryPair downsample(const TrajectoryPair& traj, double target_hz);

// Row t = positions[t] - positions[t-1]; row 0 is zero.
MatrixXd compute_velocities(const MatrixXd& positions);

// Recenter position triples on the given joint (columns 3j..3j+2) per frame.
MatrixXd recenter_on_joint(const MatrixXd& positions, int joint);

// Per-frame model features: positions, optionally recentered, with velocity
// columns appended when requested.
MatrixXd assemble_features(const MatrixXd& frames, bool add_velocities, int origin_joint);

// One window per timestep; windows before t = W-1 repeat frame 0 at the
// front so every window holds exactly W frames.
MatrixXd window_matrix(const MatrixXd& features, int window);
std::vector<ObservationWindow> window_observations(const MatrixXd& features, int window);

// Feature assembly + windowing for both streams of a trajectory.
struct WindowedPair {
  MatrixXd human;  // T x (W * D_h)
  MatrixXd robot;  // T x (W * D_r)
};
WindowedPair build_windows(const TrajectoryPair& traj, const FeatureSpec& spec);

struct SynthConfig {
  int modes = 2;
  int train_count = 40;
  int test_count = 10;
  int length = 50;
  double noise = 0.01;
  double frame_rate = 30.0;
  // spatial offset between mode centers; modes mostly differ in motion
  // character (frequency band), so this controls how early the human
  // stream reveals the mode
  double mode_offset = 0.35;

  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

// The per-mode coupling map applied framewise to the human stream. Exposed
// so tests can check generated robot frames against it directly.
VectorXd synth_mode_map(int mode, const VectorXd& human_frame);

// Deterministic two-agent toy interactions: per mode, smooth random human
// trajectories in a mode-specific frequency band, robot = mode map + noise.
DatasetSplit synth_interaction_dataset(const SynthConfig& config, std::uint64_t seed);

// On-disk format: little-endian float32 container per trajectory pair
// ("MVTR" header with T, D_h, D_r) plus a JSON manifest.
void save_trajectory(const std::filesystem::path& path, const TrajectoryPair& traj);
TrajectoryPair load_trajectory(const std::filesystem::path& path);

void save_dataset(const DatasetSplit& split, const std::filesystem::path& dir);
DatasetSplit load_dataset(const std::filesystem::path& manifest_path);

// 80/20 assignment by FNV-1a of the trajectory's manifest name; used when a
// manifest entry carries no split field.
bool hash_assigns_to_test(const std::string& name);

std::uint64_t manifest_hash(const nlohmann::json& manifest);

}  // namespace moveint::data
