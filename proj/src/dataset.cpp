#include "moveint/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace moveint::data {

std::string units_to_string(Units u) { return u == Units::meters ? "meters" : "radians"; }

Units units_from_string(const std::string& s) {
  if (s == "meters") return Units::meters;
  if (s == "radians") return Units::radians;
  throw std::invalid_argument("unknown units: " + s);
}

void TrajectoryPair::validate() const {
  if (human_frames.rows() != robot_frames.rows())
    throw std::invalid_argument("TrajectoryPair: human/robot frame counts differ");
  if (human_frames.rows() == 0) throw std::invalid_argument("TrajectoryPair: empty trajectory");
  if (frame_rate <= 0.0) throw std::invalid_argument("TrajectoryPair: frame_rate must be > 0");
  if (!human_frames.allFinite() || !robot_frames.allFinite())
    throw std::invalid_argument("TrajectoryPair: non-finite entry");
}

nlohmann::json FeatureSpec::to_json() const {
  return {{"window", window},
          {"human_velocities", human_velocities},
          {"robot_velocities", robot_velocities},
          {"human_origin_joint", human_origin_joint},
          {"robot_origin_joint", robot_origin_joint}};
}

FeatureSpec FeatureSpec::from_json(const nlohmann::json& j) {
  FeatureSpec spec;
  spec.window = j.value("window", 5);
  spec.human_velocities = j.value("human_velocities", true);
  spec.robot_velocities = j.value("robot_velocities", false);
  spec.human_origin_joint = j.value("human_origin_joint", -1);
  spec.robot_origin_joint = j.value("robot_origin_joint", -1);
  if (spec.window < 1) throw std::invalid_argument("feature_spec: window must be >= 1");
  return spec;
}

TrajectoryPair downsample(const TrajectoryPair& traj, double target_hz) {
  traj.validate();
  if (target_hz <= 0.0) throw std::invalid_argument("downsample: target_hz must be > 0");
  if (target_hz > traj.frame_rate)
    throw std::invalid_argument("downsample: target_hz exceeds source frame rate");
  const auto stride = static_cast<Eigen::Index>(std::lround(traj.frame_rate / target_hz));
  const Eigen::Index kept = (traj.length() + stride - 1) / stride;

  TrajectoryPair out = traj;
  out.human_frames.resize(kept, traj.human_frames.cols());
  out.robot_frames.resize(kept, traj.robot_frames.cols());
  for (Eigen::Index i = 0; i < kept; ++i) {
    out.human_frames.row(i) = traj.human_frames.row(i * stride);
    out.robot_frames.row(i) = traj.robot_frames.row(i * stride);
  }
  out.frame_rate = target_hz;
  return out;
}

MatrixXd compute_velocities(const MatrixXd& positions) {
  if (positions.rows() < 1) throw std::invalid_argument("compute_velocities: empty input");
  MatrixXd vel = MatrixXd::Zero(positions.rows(), positions.cols());
  if (positions.rows() > 1)
    vel.bottomRows(positions.rows() - 1) =
        positions.bottomRows(positions.rows() - 1) - positions.topRows(positions.rows() - 1);
  return vel;
}

MatrixXd recenter_on_joint(const MatrixXd& positions, int joint) {
  if (positions.cols() % 3 != 0)
    throw std::invalid_argument("recenter_on_joint: feature count not a multiple of 3");
  const Eigen::Index joints = positions.cols() / 3;
  if (joint < 0 || joint >= joints) throw std::invalid_argument("recenter_on_joint: bad joint index");
  MatrixXd out = positions;
  for (Eigen::Index j = 0; j < joints; ++j)
    out.middleCols(3 * j, 3) -= positions.middleCols(3 * joint, 3);
  return out;
}

MatrixXd assemble_features(const MatrixXd& frames, bool add_velocities, int origin_joint) {
  MatrixXd base = origin_joint >= 0 ? recenter_on_joint(frames, origin_joint) : frames;
  if (!add_velocities) return base;
  MatrixXd out(base.rows(), 2 * base.cols());
  out.leftCols(base.cols()) = base;
  out.rightCols(base.cols()) = compute_velocities(base);
  return out;
}

MatrixXd window_matrix(const MatrixXd& features, int window) {
  const Eigen::Index frames = features.rows();
  const Eigen::Index dim = features.cols();
  if (frames == 0) throw std::invalid_argument("window_matrix: empty trajectory");
  if (window < 1) throw std::invalid_argument("window_matrix: window must be >= 1");
  MatrixXd out(frames, window * dim);
  for (Eigen::Index t = 0; t < frames; ++t) {
    for (int w = 0; w < window; ++w) {
      const Eigen::Index src = std::max<Eigen::Index>(0, t - window + 1 + w);
      out.block(t, w * dim, 1, dim) = features.row(src);
    }
  }
  return out;
}

std::vector<ObservationWindow> window_observations(const MatrixXd& features, int window) {
  const MatrixXd m = window_matrix(features, window);
  std::vector<ObservationWindow> out;
  out.reserve(m.rows());
  for (Eigen::Index t = 0; t < m.rows(); ++t)
    out.push_back({m.row(t).transpose(), static_cast<int>(t)});
  return out;
}

WindowedPair build_windows(const TrajectoryPair& traj, const FeatureSpec& spec) {
  const MatrixXd hf =
      assemble_features(traj.human_frames, spec.human_velocities, spec.human_origin_joint);
  const MatrixXd rf =
      assemble_features(traj.robot_frames, spec.robot_velocities, spec.robot_origin_joint);
  return {window_matrix(hf, spec.window), window_matrix(rf, spec.window)};
}

nlohmann::json SynthConfig::to_json() const {
  return {{"modes", modes},     {"train_count", train_count}, {"test_count", test_count},
          {"length", length},   {"noise", noise},             {"frame_rate", frame_rate},
          {"mode_offset", mode_offset}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  SynthConfig c;
  c.modes = j.value("modes", 2);
  c.train_count = j.value("train_count", 40);
  c.test_count = j.value("test_count", 10);
  c.length = j.value("length", 50);
  c.noise = j.value("noise", 0.01);
  c.frame_rate = j.value("frame_rate", 30.0);
  c.mode_offset = j.value("mode_offset", 0.35);
  return c;
}

VectorXd synth_mode_map(int mode, const VectorXd& human_frame) {
  if (human_frame.size() != 2) throw std::invalid_argument("synth_mode_map: expects 2-D frames");
  const double theta = 0.9 + 1.7 * mode;
  Eigen::Matrix2d rot;
  rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  Eigen::Vector2d offset(0.4 * std::cos(1.3 * mode), 0.4 * std::sin(1.3 * mode));
  return rot * human_frame + offset;
}

namespace {

// Smoothstep ramp from the shared rest segment into mode-specific motion.
// All modes look identical for roughly the first fifth of a trajectory, as
// interactions recorded from a neutral start do, so the conditional over
// robot motions is genuinely multimodal there.
double synth_ramp(double tau) {
  constexpr double kOnset = 0.08;
  constexpr double kWidth = 0.12;
  if (tau <= kOnset) return 0.0;
  const double s = std::min(1.0, (tau - kOnset) / kWidth);
  return s * s * (3.0 - 2.0 * s);
}

MatrixXd synth_human_trajectory(int mode, int length, double mode_offset, Rng& rng) {
  // Three random harmonics per dimension. Modes overlap spatially (offset
  // centers by mode_offset) and differ mainly in their frequency band, the
  // way a slow reach differs from a fast wave.
  const double f_lo = 0.4 + 0.8 * mode;
  const double f_hi = 1.0 + 0.8 * mode;
  const double cx = 0.6 + mode_offset * std::cos(2.0 * M_PI * mode / 6.0 + 0.4);
  const double cy = 0.2 + mode_offset * std::sin(2.0 * M_PI * mode / 6.0 + 0.4);

  const double rest_x = 0.2 + rng.uniform(-0.05, 0.05);
  const double rest_y = -0.1 + rng.uniform(-0.05, 0.05);

  MatrixXd traj(length, 2);
  for (int d = 0; d < 2; ++d) {
    double amp[3], freq[3], phase[3];
    for (int k = 0; k < 3; ++k) {
      amp[k] = rng.uniform(0.15, 0.45) / (k + 1);
      freq[k] = rng.uniform(f_lo, f_hi);
      phase[k] = rng.uniform(0.0, 2.0 * M_PI);
    }
    for (int t = 0; t < length; ++t) {
      const double tau = length > 1 ? static_cast<double>(t) / (length - 1) : 0.0;
      double v = d == 0 ? cx : cy;
      for (int k = 0; k < 3; ++k) v += amp[k] * std::sin(2.0 * M_PI * freq[k] * tau + phase[k]);
      const double rest = d == 0 ? rest_x : rest_y;
      traj(t, d) = rest + synth_ramp(tau) * v;
    }
  }
  return traj;
}

TrajectoryPair synth_trajectory(int mode, const SynthConfig& cfg, Rng& rng) {
  TrajectoryPair traj;
  traj.human_frames = synth_human_trajectory(mode, cfg.length, cfg.mode_offset, rng);
  traj.robot_frames.resize(cfg.length, 2);
  for (int t = 0; t < cfg.length; ++t) {
    VectorXd r = synth_mode_map(mode, traj.human_frames.row(t).transpose());
    for (int d = 0; d < 2; ++d) r(d) += cfg.noise * rng.normal();
    traj.robot_frames.row(t) = r.transpose();
  }
  traj.frame_rate = cfg.frame_rate;
  traj.units = Units::meters;
  traj.mode = mode;
  traj.action_label = "mode-" + std::to_string(mode);
  return traj;
}

nlohmann::json trajectory_entry(const TrajectoryPair& traj, const std::string& path,
                                const std::string& split) {
  nlohmann::json e = {{"path", path},
                      {"frame_rate", traj.frame_rate},
                      {"units", units_to_string(traj.units)},
                      {"split", split}};
  if (traj.action_label) e["action_label"] = *traj.action_label;
  if (traj.mode >= 0) e["mode"] = traj.mode;
  return e;
}

}  // namespace

DatasetSplit synth_interaction_dataset(const SynthConfig& config, std::uint64_t seed) {
  if (config.modes < 1) throw std::invalid_argument("synth: need at least one mode");
  if (config.length < 1) throw std::invalid_argument("synth: length must be >= 1");
  if (config.noise < 0.0) throw std::invalid_argument("synth: negative noise level");
  if (config.train_count < 0 || config.test_count < 0)
    throw std::invalid_argument("synth: negative trajectory count");

  Rng rng(mix_seed(seed, 0x53594e54));  // "SYNT"
  DatasetSplit split;
  FeatureSpec spec;
  spec.window = 5;
  spec.human_velocities = true;
  spec.robot_velocities = false;

  nlohmann::json entries = nlohmann::json::array();
  for (int i = 0; i < config.train_count; ++i) {
    const int mode = i % config.modes;
    split.train.push_back(synth_trajectory(mode, config, rng));
    entries.push_back(trajectory_entry(split.train.back(),
                                       "traj_train_" + std::to_string(i) + ".mvtr", "train"));
  }
  for (int i = 0; i < config.test_count; ++i) {
    const int mode = i % config.modes;
    split.test.push_back(synth_trajectory(mode, config, rng));
    entries.push_back(
        trajectory_entry(split.test.back(), "traj_test_" + std::to_string(i) + ".mvtr", "test"));
  }

  split.manifest = {{"format", "moveint-dataset-v1"},
                    {"feature_spec", spec.to_json()},
                    {"generator", {{"type", "synth"}, {"config", config.to_json()}, {"seed", seed}}},
                    {"trajectories", entries}};
  return split;
}

namespace {

constexpr char kMagic[4] = {'M', 'V', 'T', 'R'};

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("trajectory container truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32(os, bits);
}

float read_f32(std::istream& is) {
  std::uint32_t bits = read_u32(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

void write_matrix_f32(std::ostream& os, const MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_f32(os, static_cast<float>(m(r, c)));
}

MatrixXd read_matrix_f32(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = static_cast<double>(read_f32(is));
  return m;
}

}  // namespace

void save_trajectory(const std::filesystem::path& path, const TrajectoryPair& traj) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os.write(kMagic, 4);
  write_u32(os, 1);  // version
  write_u32(os, static_cast<std::uint32_t>(traj.length()));
  write_u32(os, static_cast<std::uint32_t>(traj.human_frames.cols()));
  write_u32(os, static_cast<std::uint32_t>(traj.robot_frames.cols()));
  write_f32(os, static_cast<float>(traj.frame_rate));
  write_u32(os, traj.units == Units::meters ? 0 : 1);
  write_matrix_f32(os, traj.human_frames);
  write_matrix_f32(os, traj.robot_frames);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

TrajectoryPair load_trajectory(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a trajectory container: " + path.string());
  const std::uint32_t version = read_u32(is);
  if (version != 1) throw std::runtime_error("unsupported container version");
  const auto frames = static_cast<Eigen::Index>(read_u32(is));
  const auto dh = static_cast<Eigen::Index>(read_u32(is));
  const auto dr = static_cast<Eigen::Index>(read_u32(is));
  TrajectoryPair traj;
  traj.frame_rate = static_cast<double>(read_f32(is));
  traj.units = read_u32(is) == 0 ? Units::meters : Units::radians;
  traj.human_frames = read_matrix_f32(is, frames, dh);
  traj.robot_frames = read_matrix_f32(is, frames, dr);
  return traj;
}

void save_dataset(const DatasetSplit& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& entries = split.manifest.at("trajectories");
  const size_t total = split.train.size() + split.test.size();
  if (entries.size() != total)
    throw std::runtime_error("save_dataset: manifest entry count mismatch");
  size_t train_i = 0, test_i = 0;
  for (const auto& e : entries) {
    const bool is_test = e.at("split").get<std::string>() == "test";
    const TrajectoryPair& traj = is_test ? split.test.at(test_i++) : split.train.at(train_i++);
    save_trajectory(dir / e.at("path").get<std::string>(), traj);
  }
  std::ofstream os(dir / "manifest.json");
  os << split.manifest.dump(2) << "\n";
  if (!os) throw std::runtime_error("failed to write manifest");
}

bool hash_assigns_to_test(const std::string& name) { return fnv1a64(name) % 5 == 0; }

DatasetSplit load_dataset(const std::filesystem::path& manifest_path) {
  std::filesystem::path path = manifest_path;
  if (std::filesystem::is_directory(path)) path /= "manifest.json";
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open manifest: " + path.string());
  nlohmann::json manifest = nlohmann::json::parse(is);
  const auto base = path.parent_path();

  DatasetSplit split;
  split.manifest = manifest;
  for (const auto& e : manifest.at("trajectories")) {
    const std::string rel = e.at("path").get<std::string>();
    TrajectoryPair traj = load_trajectory(base / rel);
    traj.frame_rate = e.value("frame_rate", traj.frame_rate);
    if (e.contains("units")) traj.units = units_from_string(e.at("units").get<std::string>());
    if (e.contains("action_label")) traj.action_label = e.at("action_label").get<std::string>();
    if (e.contains("mode")) traj.mode = e.at("mode").get<int>();
    traj.validate();
    const bool is_test = e.contains("split") ? e.at("split").get<std::string>() == "test"
                                             : hash_assigns_to_test(rel);
    (is_test ? split.test : split.train).push_back(std::move(traj));
  }
  return split;
}

std::uint64_t manifest_hash(const nlohmann::json& manifest) { return fnv1a64(manifest.dump()); }

}  // namespace moveint::data
