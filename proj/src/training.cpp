#include "moveint/training.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace moveint::train {

nlohmann::json TrainConfig::to_json() const {
  return {{"beta", beta},
          {"n_samples", n_samples},
          {"epochs", epochs},
          {"step_size", step_size},
          {"seed", seed},
          {"init_checkpoint", init_checkpoint},
          {"clip_norm", clip_norm},
          {"log_interval", log_interval},
          {"shuffle", shuffle},
          {"early_stop_patience", early_stop_patience},
          {"separation_enabled", separation_enabled},
          {"adam_beta1", adam_beta1},
          {"adam_beta2", adam_beta2},
          {"adam_eps", adam_eps}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.beta = j.value("beta", c.beta);
  c.n_samples = j.value("n_samples", c.n_samples);
  c.epochs = j.value("epochs", c.epochs);
  c.step_size = j.value("step_size", c.step_size);
  c.seed = j.value("seed", c.seed);
  c.init_checkpoint = j.value("init_checkpoint", c.init_checkpoint);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.log_interval = j.value("log_interval", c.log_interval);
  c.shuffle = j.value("shuffle", c.shuffle);
  c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
  c.separation_enabled = j.value("separation_enabled", c.separation_enabled);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  if (c.epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
  if (c.step_size <= 0.0) throw std::invalid_argument("train config: step_size must be > 0");
  return c;
}

double clip_gradients(std::vector<MatrixXd>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& g : grads) g *= scale;
  }
  return norm;
}

void Adam::step(ad::ParamStore& params, const std::vector<MatrixXd>& grads) {
  if (grads.size() != params.count()) throw std::invalid_argument("Adam: gradient count mismatch");
  if (m_.empty()) {
    for (const auto& t : params.tensors) {
      m_.push_back(MatrixXd::Zero(t.rows(), t.cols()));
      v_.push_back(MatrixXd::Zero(t.rows(), t.cols()));
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < params.count(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = (beta2_ * v_[i].array() + (1.0 - beta2_) * grads[i].array().square()).matrix();
    params.tensors[i].array() -=
        lr_ * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
  }
}

TrainResult train(const data::DatasetSplit& dataset, const ModelConfig& model_config,
                  const TrainConfig& train_config) {
  if (dataset.train.empty()) throw std::invalid_argument("train: empty training split");
  const data::FeatureSpec spec = dataset.feature_spec();

  std::vector<data::WindowedPair> windows;
  windows.reserve(dataset.train.size());
  for (const auto& traj : dataset.train) {
    windows.push_back(build_windows(traj, spec));
    if (windows.back().human.cols() != model_config.human_dim ||
        windows.back().robot.cols() != model_config.robot_dim)
      throw std::invalid_argument("train: dataset window width does not match the model config");
  }

  TrainResult result;
  result.config = model_config;
  if (!train_config.init_checkpoint.empty()) {
    const Checkpoint ckpt = load_checkpoint(train_config.init_checkpoint);
    MoVEIntModel warm = model_from_checkpoint(ckpt, model_config);
    result.params = warm.params();
  } else {
    result.params = MoVEIntModel(model_config, train_config.seed).params();
  }

  MoVEIntModel model(model_config, result.params);
  Adam opt(train_config.step_size, train_config.adam_beta1, train_config.adam_beta2,
           train_config.adam_eps);

  losses::LossOptions loss_opts;
  loss_opts.beta = train_config.beta;
  loss_opts.n_samples = train_config.n_samples;
  loss_opts.separation_enabled = train_config.separation_enabled;

  Rng shuffle_rng(mix_seed(train_config.seed, 0x53485546));  // "SHUF"
  std::vector<int> order(windows.size());
  std::iota(order.begin(), order.end(), 0);

  double best_epoch_loss = std::numeric_limits<double>::infinity();
  int epochs_since_best = 0;
  int step_count = 0;
  const auto start = std::chrono::steady_clock::now();

  for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
    if (train_config.shuffle) {
      for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
        std::swap(order[i], order[shuffle_rng.uniform_int(0, i)]);
    }
    double epoch_loss = 0.0;
    for (int idx : order) {
      loss_opts.noise_seed = mix_seed(mix_seed(train_config.seed, epoch), idx);
      std::vector<MatrixXd> grads;
      const losses::LossBreakdown breakdown =
          losses::total_loss(model, windows[idx].human, windows[idx].robot, loss_opts, &grads);
      if (!std::isfinite(breakdown.total)) {
        result.params = model.params();
        result.diverged = true;
        result.diagnostic = "non-finite loss at epoch " + std::to_string(epoch) +
                            ", trajectory " + std::to_string(idx) +
                            "; parameters from the last finite step were kept";
        return result;
      }
      clip_gradients(grads, train_config.clip_norm);
      opt.step(model.params(), grads);
      epoch_loss += breakdown.total;
      ++step_count;
      if (step_count % train_config.log_interval == 0) {
        const double ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - start)
                              .count();
        result.log.push_back({epoch, step_count, idx, breakdown, ms});
      }
    }
    if (train_config.early_stop_patience > 0) {
      if (epoch_loss < best_epoch_loss - 1e-12) {
        best_epoch_loss = epoch_loss;
        epochs_since_best = 0;
      } else if (++epochs_since_best >= train_config.early_stop_patience) {
        break;
      }
    }
  }
  result.params = model.params();
  return result;
}

namespace {

constexpr char kMagic[4] = {'M', 'V', 'C', 'K'};

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const ad::ParamStore& params, const nlohmann::json& meta) {
  nlohmann::json tensors = nlohmann::json::array();
  for (std::size_t i = 0; i < params.count(); ++i)
    tensors.push_back({{"name", params.names[i]},
                       {"rows", params.tensors[i].rows()},
                       {"cols", params.tensors[i].cols()}});
  const nlohmann::json header = {
      {"model_config", config.to_json()}, {"tensors", tensors}, {"meta", meta}};
  const std::string header_str = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os.write(kMagic, 4);
  write_u64(os, 1);  // version
  write_u64(os, header_str.size());
  os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& t : params.tensors)
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        std::uint64_t bits;
        const double v = t(r, c);
        std::memcpy(&bits, &v, 8);
        write_u64(os, bits);
      }
  if (!os) throw std::runtime_error("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a checkpoint file: " + path.string());
  if (read_u64(is) != 1) throw std::runtime_error("unsupported checkpoint version");
  const std::uint64_t header_len = read_u64(is);
  std::string header_str(header_len, '\0');
  is.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!is) throw std::runtime_error("checkpoint truncated");
  const nlohmann::json header = nlohmann::json::parse(header_str);

  Checkpoint ckpt;
  ckpt.config = ModelConfig::from_json(header.at("model_config"));
  ckpt.meta = header.value("meta", nlohmann::json::object());
  for (const auto& t : header.at("tensors")) {
    const auto rows = t.at("rows").get<Eigen::Index>();
    const auto cols = t.at("cols").get<Eigen::Index>();
    MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) {
        const std::uint64_t bits = read_u64(is);
        double v;
        std::memcpy(&v, &bits, 8);
        m(r, c) = v;
      }
    ckpt.params.add(t.at("name").get<std::string>(), std::move(m));
  }
  return ckpt;
}

MoVEIntModel model_from_checkpoint(const Checkpoint& ckpt,
                                   const std::optional<ModelConfig>& requested) {
  if (requested && !(*requested == ckpt.config))
    throw std::runtime_error(
        "checkpoint is incompatible with the requested model configuration");
  return MoVEIntModel(ckpt.config, ckpt.params);
}

void write_training_log_csv(const std::filesystem::path& path, const std::vector<LogRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << "epoch,step,trajectory,bc,recon,kl,sep_means,sep_temporal,sep_entropy,total,wall_ms\n";
  os.precision(17);
  for (const auto& r : rows) {
    os << r.epoch << ',' << r.step << ',' << r.trajectory << ',' << r.loss.bc << ','
       << r.loss.recon << ',' << r.loss.kl << ',' << r.loss.sep_means << ','
       << r.loss.sep_temporal << ',' << r.loss.sep_entropy << ',' << r.loss.total << ','
       << r.wall_ms << '\n';
  }
}

}  // namespace moveint::train
