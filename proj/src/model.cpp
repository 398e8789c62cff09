#include "moveint/model.hpp"

#include <cmath>
#include <stdexcept>

namespace moveint {

DiagonalGaussian DiagonalGaussian::from_raw(VectorXd mean, VectorXd raw_log_std) {
  if (mean.size() != raw_log_std.size())
    throw std::invalid_argument("DiagonalGaussian: mean/log_std size mismatch");
  DiagonalGaussian g;
  g.mean = std::move(mean);
  g.log_std = raw_log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  return g;
}

DiagonalGaussian DiagonalGaussian::from_moments(const VectorXd& mean, const VectorXd& variance) {
  if (mean.size() != variance.size())
    throw std::invalid_argument("DiagonalGaussian: mean/variance size mismatch");
  if ((variance.array() <= kStdFloor * kStdFloor).any())
    throw std::invalid_argument("DiagonalGaussian: variance below the std floor");
  VectorXd log_std = (variance.array().sqrt() - kStdFloor).log().matrix();
  return from_raw(mean, std::move(log_std));
}

VectorXd DiagonalGaussian::sample(Rng& rng) const {
  return mean + stddev().cwiseProduct(rng.normal_vector(dim()));
}

void MixtureDensity::validate() const {
  if (components.empty()) throw std::invalid_argument("MixtureDensity: no components");
  if (alphas.size() != size()) throw std::invalid_argument("MixtureDensity: alpha count mismatch");
  if ((alphas.array() < 0.0).any())
    throw std::invalid_argument("MixtureDensity: negative coefficient");
  if (std::abs(alphas.sum() - 1.0) > 1e-6)
    throw std::invalid_argument("MixtureDensity: coefficients do not sum to 1");
  const Eigen::Index d = components.front().dim();
  for (const auto& c : components)
    if (c.dim() != d) throw std::invalid_argument("MixtureDensity: component dim mismatch");
}

DiagonalGaussian combine_mixture(const MixtureDensity& m) {
  m.validate();
  const Eigen::Index d = m.components.front().dim();
  VectorXd mean = VectorXd::Zero(d);
  VectorXd var = VectorXd::Zero(d);
  for (int i = 0; i < m.size(); ++i) {
    mean += m.alphas(i) * m.components[i].mean;
    var += m.alphas(i) * m.components[i].variance();
  }
  return DiagonalGaussian::from_moments(mean, var);
}

void check_stream(const RecurrentState& state, std::uint64_t trajectory_id, int step) {
  if (state.trajectory_id != trajectory_id)
    throw std::logic_error("RecurrentState reused across trajectories");
  if (state.step != step)
    throw std::logic_error("RecurrentState fed out of order");
}

void ModelConfig::validate() const {
  for (int v : {human_dim, robot_dim, latent_dim, n_components, hidden1, hidden2, recurrent_dim})
    if (v <= 0) throw std::invalid_argument("ModelConfig: all dimensions must be positive");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"human_dim", human_dim},       {"robot_dim", robot_dim},
          {"latent_dim", latent_dim},     {"n_components", n_components},
          {"hidden1", hidden1},           {"hidden2", hidden2},
          {"recurrent_dim", recurrent_dim}, {"leaky_slope", leaky_slope}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.human_dim = j.at("human_dim").get<int>();
  c.robot_dim = j.at("robot_dim").get<int>();
  c.latent_dim = j.at("latent_dim").get<int>();
  c.n_components = j.at("n_components").get<int>();
  c.hidden1 = j.at("hidden1").get<int>();
  c.hidden2 = j.at("hidden2").get<int>();
  c.recurrent_dim = j.at("recurrent_dim").get<int>();
  c.leaky_slope = j.value("leaky_slope", 0.01);
  c.validate();
  return c;
}

MoVEIntModel::MoVEIntModel(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  register_tensors();
  init_params(seed);
}

MoVEIntModel::MoVEIntModel(ModelConfig config, ad::ParamStore params)
    : config_(std::move(config)) {
  config_.validate();
  ad::ParamStore loaded = std::move(params);
  register_tensors();
  if (loaded.names != params_.names)
    throw std::invalid_argument("parameter tensors do not match the model config");
  for (std::size_t i = 0; i < loaded.tensors.size(); ++i) {
    if (loaded.tensors[i].rows() != params_.tensors[i].rows() ||
        loaded.tensors[i].cols() != params_.tensors[i].cols())
      throw std::invalid_argument("parameter tensor " + loaded.names[i] + " has wrong shape");
  }
  params_ = std::move(loaded);
}

void MoVEIntModel::register_tensors() {
  const auto& c = config_;
  const int nl = c.n_components * c.latent_dim;
  auto mat = [&](const char* name, int rows, int cols) {
    return params_.add(name, MatrixXd::Zero(rows, cols));
  };
  slots_.enc_w1 = mat("enc.w1", c.hidden1, c.robot_dim);
  slots_.enc_b1 = mat("enc.b1", c.hidden1, 1);
  slots_.enc_w2 = mat("enc.w2", c.hidden2, c.hidden1);
  slots_.enc_b2 = mat("enc.b2", c.hidden2, 1);
  slots_.enc_mu_w = mat("enc.mu_w", c.latent_dim, c.hidden2);
  slots_.enc_mu_b = mat("enc.mu_b", c.latent_dim, 1);
  slots_.enc_ls_w = mat("enc.ls_w", c.latent_dim, c.hidden2);
  slots_.enc_ls_b = mat("enc.ls_b", c.latent_dim, 1);
  slots_.dec_w1 = mat("dec.w1", c.hidden2, c.latent_dim);
  slots_.dec_b1 = mat("dec.b1", c.hidden2, 1);
  slots_.dec_w2 = mat("dec.w2", c.hidden1, c.hidden2);
  slots_.dec_b2 = mat("dec.b2", c.hidden1, 1);
  slots_.dec_out_w = mat("dec.out_w", c.robot_dim, c.hidden1);
  slots_.dec_out_b = mat("dec.out_b", c.robot_dim, 1);
  slots_.mdn_w1 = mat("mdn.w1", c.hidden1, c.human_dim);
  slots_.mdn_b1 = mat("mdn.b1", c.hidden1, 1);
  slots_.mdn_w2 = mat("mdn.w2", c.hidden2, c.hidden1);
  slots_.mdn_b2 = mat("mdn.b2", c.hidden2, 1);
  slots_.mdn_mu_w = mat("mdn.mu_w", nl, c.hidden2);
  slots_.mdn_mu_b = mat("mdn.mu_b", nl, 1);
  slots_.mdn_ls_w = mat("mdn.ls_w", nl, c.hidden2);
  slots_.mdn_ls_b = mat("mdn.ls_b", nl, 1);
  slots_.gru_w_ih = mat("gru.w_ih", 3 * c.recurrent_dim, c.hidden2);
  slots_.gru_b_ih = mat("gru.b_ih", 3 * c.recurrent_dim, 1);
  slots_.gru_w_hh = mat("gru.w_hh", 3 * c.recurrent_dim, c.recurrent_dim);
  slots_.gru_b_hh = mat("gru.b_hh", 3 * c.recurrent_dim, 1);
  slots_.alpha_w = mat("alpha.w", c.n_components, c.recurrent_dim);
  slots_.alpha_b = mat("alpha.b", c.n_components, 1);
}

void MoVEIntModel::init_params(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x4d4f5645));  // "MOVE"
  for (std::size_t i = 0; i < params_.count(); ++i) {
    MatrixXd& t = params_.tensors[i];
    // fan-in scaled uniform; biases use their layer's fan-in, the recurrent
    // tensors use 1/sqrt(recurrent_dim)
    double fan_in;
    const std::string& name = params_.names[i];
    if (name.rfind("gru.", 0) == 0) {
      fan_in = config_.recurrent_dim;
    } else if (t.cols() > 1) {
      fan_in = static_cast<double>(t.cols());
    } else {
      // bias: find the matching weight fan-in by convention w-then-b ordering
      fan_in = static_cast<double>(params_.tensors[i - 1].cols());
    }
    const double bound = 1.0 / std::sqrt(fan_in);
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = rng.uniform(-bound, bound);
  }
}

namespace {
ad::Value linear(ad::Graph& g, ad::Value w, ad::Value b, ad::Value x) {
  return g.add(g.matmul(w, x), b);
}
}  // namespace

MoVEIntModel::GaussNodes MoVEIntModel::encode_nodes(ad::Graph& g, ad::Value robot_window) const {
  if (g.value(robot_window).rows() != config_.robot_dim || g.value(robot_window).cols() != 1)
    throw std::invalid_argument("encode: robot window has wrong length");
  ad::Value h1 = g.leaky_relu(linear(g, g.param(slots_.enc_w1), g.param(slots_.enc_b1), robot_window),
                              config_.leaky_slope);
  ad::Value h2 = g.leaky_relu(linear(g, g.param(slots_.enc_w2), g.param(slots_.enc_b2), h1),
                              config_.leaky_slope);
  ad::Value mu = linear(g, g.param(slots_.enc_mu_w), g.param(slots_.enc_mu_b), h2);
  ad::Value ls = g.clamp(linear(g, g.param(slots_.enc_ls_w), g.param(slots_.enc_ls_b), h2),
                         DiagonalGaussian::kLogStdMin, DiagonalGaussian::kLogStdMax);
  return {mu, ls};
}

ad::Value MoVEIntModel::decode_nodes(ad::Graph& g, ad::Value latent) const {
  if (g.value(latent).rows() != config_.latent_dim || g.value(latent).cols() != 1)
    throw std::invalid_argument("decode: latent has wrong length");
  ad::Value h1 = g.leaky_relu(linear(g, g.param(slots_.dec_w1), g.param(slots_.dec_b1), latent),
                              config_.leaky_slope);
  ad::Value h2 = g.leaky_relu(linear(g, g.param(slots_.dec_w2), g.param(slots_.dec_b2), h1),
                              config_.leaky_slope);
  return linear(g, g.param(slots_.dec_out_w), g.param(slots_.dec_out_b), h2);
}

MoVEIntModel::MixtureNodes MoVEIntModel::mdn_nodes(ad::Graph& g, ad::Value human_window,
                                                   ad::Value hidden_prev) const {
  if (g.value(human_window).rows() != config_.human_dim || g.value(human_window).cols() != 1)
    throw std::invalid_argument("mdn: human window has wrong length");
  if (g.value(hidden_prev).rows() != config_.recurrent_dim)
    throw std::invalid_argument("mdn: recurrent state has wrong length");

  ad::Value h1 = g.leaky_relu(linear(g, g.param(slots_.mdn_w1), g.param(slots_.mdn_b1), human_window),
                              config_.leaky_slope);
  ad::Value trunk = g.leaky_relu(linear(g, g.param(slots_.mdn_w2), g.param(slots_.mdn_b2), h1),
                                 config_.leaky_slope);

  ad::Value mu_all = linear(g, g.param(slots_.mdn_mu_w), g.param(slots_.mdn_mu_b), trunk);
  ad::Value ls_all = g.clamp(linear(g, g.param(slots_.mdn_ls_w), g.param(slots_.mdn_ls_b), trunk),
                             DiagonalGaussian::kLogStdMin, DiagonalGaussian::kLogStdMax);

  MixtureNodes out;
  for (int i = 0; i < config_.n_components; ++i) {
    out.comps.push_back({g.slice_rows(mu_all, i * config_.latent_dim, config_.latent_dim),
                         g.slice_rows(ls_all, i * config_.latent_dim, config_.latent_dim)});
  }

  // GRU cell: reset/update/candidate gate chunks, then the convex update.
  const int r = config_.recurrent_dim;
  ad::Value gi = linear(g, g.param(slots_.gru_w_ih), g.param(slots_.gru_b_ih), trunk);
  ad::Value gh = linear(g, g.param(slots_.gru_w_hh), g.param(slots_.gru_b_hh), hidden_prev);
  ad::Value reset = g.sigmoid(g.add(g.slice_rows(gi, 0, r), g.slice_rows(gh, 0, r)));
  ad::Value update = g.sigmoid(g.add(g.slice_rows(gi, r, r), g.slice_rows(gh, r, r)));
  ad::Value cand = g.tanh(
      g.add(g.slice_rows(gi, 2 * r, r), g.cmul(reset, g.slice_rows(gh, 2 * r, r))));
  ad::Value keep = g.affine(update, -1.0, 1.0);
  out.hidden = g.add(g.cmul(keep, cand), g.cmul(update, hidden_prev));

  out.alphas = g.softmax(linear(g, g.param(slots_.alpha_w), g.param(slots_.alpha_b), out.hidden));
  return out;
}

ad::Value MoVEIntModel::std_nodes(ad::Graph& g, ad::Value log_std) {
  return g.affine(g.exp(log_std), 1.0, DiagonalGaussian::kStdFloor);
}

std::pair<ad::Value, ad::Value> MoVEIntModel::combine_nodes(ad::Graph& g, const MixtureNodes& m) {
  ad::Value mean, var;
  for (int i = 0; i < static_cast<int>(m.comps.size()); ++i) {
    ad::Value a = g.slice_rows(m.alphas, i, 1);
    // broadcast the scalar coefficient by an outer product against ones
    ad::Value ones = g.input(MatrixXd::Ones(g.value(m.comps[i].mean).rows(), 1));
    ad::Value ai = g.matmul(ones, a);
    ad::Value mi = g.cmul(ai, m.comps[i].mean);
    ad::Value si = std_nodes(g, m.comps[i].log_std);
    ad::Value vi = g.cmul(ai, g.cmul(si, si));
    mean = i == 0 ? mi : g.add(mean, mi);
    var = i == 0 ? vi : g.add(var, vi);
  }
  return {mean, var};
}

DiagonalGaussian MoVEIntModel::encode_robot(const VectorXd& robot_window) const {
  ad::Graph g(&params_);
  const GaussNodes nodes = encode_nodes(g, g.input(robot_window));
  return DiagonalGaussian::from_raw(g.value(nodes.mean).col(0), g.value(nodes.log_std).col(0));
}

VectorXd MoVEIntModel::decode_robot(const VectorXd& latent) const {
  ad::Graph g(&params_);
  return g.value(decode_nodes(g, g.input(latent))).col(0);
}

RecurrentState MoVEIntModel::initial_state(std::uint64_t trajectory_id) const {
  return {VectorXd::Zero(config_.recurrent_dim), trajectory_id, 0};
}

std::pair<MixtureDensity, RecurrentState> MoVEIntModel::mdn_step(
    const VectorXd& human_window, const RecurrentState& state) const {
  ad::Graph g(&params_);
  const MixtureNodes nodes = mdn_nodes(g, g.input(human_window), g.input(state.hidden));
  MixtureDensity mix;
  for (const auto& c : nodes.comps)
    mix.components.push_back(
        DiagonalGaussian::from_raw(g.value(c.mean).col(0), g.value(c.log_std).col(0)));
  mix.alphas = g.value(nodes.alphas).col(0);
  RecurrentState next{g.value(nodes.hidden).col(0), state.trajectory_id, state.step + 1};
  return {std::move(mix), std::move(next)};
}

}  // namespace moveint
