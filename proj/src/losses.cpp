#include "moveint/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace moveint::losses {

double kl_diag_gaussians(const DiagonalGaussian& q, const DiagonalGaussian& p) {
  if (q.dim() != p.dim()) throw std::invalid_argument("kl_diag_gaussians: dimension mismatch");
  const Eigen::ArrayXd sq = q.stddev().array();
  const Eigen::ArrayXd sp = p.stddev().array();
  const Eigen::ArrayXd diff = (q.mean - p.mean).array();
  return (sp.log() - sq.log() + (sq.square() + diff.square()) / (2.0 * sp.square()) - 0.5).sum();
}

double gaussian_recon_loglik(const VectorXd& x, const VectorXd& decoded) {
  if (x.size() != decoded.size())
    throw std::invalid_argument("gaussian_recon_loglik: size mismatch");
  return -0.5 * (x - decoded).squaredNorm();
}

double elbo(const VectorXd& x_r, const DiagonalGaussian& q, const DiagonalGaussian& prior,
            double beta, int n_samples, const DecodeFn& decode, Rng& rng) {
  if (n_samples < 1) throw std::invalid_argument("elbo: n_samples must be >= 1");
  double recon = 0.0;
  for (int s = 0; s < n_samples; ++s) recon += gaussian_recon_loglik(x_r, decode(q.sample(rng)));
  recon /= n_samples;
  return recon - beta * kl_diag_gaussians(q, prior);
}

double behavior_cloning_loss(const VectorXd& x_r, const DiagonalGaussian& prior, int n_samples,
                             const DecodeFn& decode, Rng& rng) {
  if (n_samples < 1) throw std::invalid_argument("behavior_cloning_loss: n_samples must be >= 1");
  double ll = 0.0;
  for (int s = 0; s < n_samples; ++s) ll += gaussian_recon_loglik(x_r, decode(prior.sample(rng)));
  return -ll / n_samples;
}

SepTerms separation_loss(const MixtureDensity& m, const MixtureDensity* prev) {
  m.validate();
  const int n = m.size();
  SepTerms out;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      out.means += std::exp(-(m.components[i].mean - m.components[j].mean).squaredNorm());
  if (prev != nullptr) {
    if (prev->size() != n) throw std::invalid_argument("separation_loss: component count changed");
    double closeness = 0.0;
    for (int i = 0; i < n; ++i)
      closeness += std::exp(-(m.components[i].mean - prev->components[i].mean).squaredNorm());
    out.temporal = 1.0 - closeness / n;
  }
  for (int i = 0; i < n; ++i) {
    const double a = m.alphas(i);
    if (a > 0.0) out.entropy += a * std::log(a);
  }
  return out;
}

namespace {

using ad::Graph;
using ad::Value;

// mean of a list of scalar nodes
Value mean_of(Graph& g, const std::vector<Value>& xs) {
  Value acc = xs.front();
  for (std::size_t i = 1; i < xs.size(); ++i) acc = g.add(acc, xs[i]);
  return g.affine(acc, 1.0 / static_cast<double>(xs.size()), 0.0);
}

}  // namespace

LossBreakdown total_loss(const MoVEIntModel& model, const MatrixXd& human_windows,
                         const MatrixXd& robot_windows, const LossOptions& options,
                         std::vector<MatrixXd>* grads) {
  const auto& cfg = model.config();
  if (human_windows.rows() != robot_windows.rows())
    throw std::invalid_argument("total_loss: human/robot window counts differ");
  if (human_windows.rows() == 0) throw std::invalid_argument("total_loss: empty trajectory");
  if (human_windows.cols() != cfg.human_dim || robot_windows.cols() != cfg.robot_dim)
    throw std::invalid_argument("total_loss: window width does not match the model config");
  if (options.n_samples < 1) throw std::invalid_argument("total_loss: n_samples must be >= 1");

  const Eigen::Index steps = human_windows.rows();
  const int S = options.n_samples;
  const int L = cfg.latent_dim;

  // All reparameterization noise is drawn up front in a fixed order so the
  // loss is a deterministic function of the parameters for a given seed.
  Rng rng(options.noise_seed);
  std::vector<std::vector<VectorXd>> eps_q(steps), eps_p(steps);
  for (Eigen::Index t = 0; t < steps; ++t) {
    for (int s = 0; s < S; ++s) eps_q[t].push_back(rng.normal_vector(L));
    for (int s = 0; s < S; ++s) eps_p[t].push_back(rng.normal_vector(L));
  }

  Graph g(&model.params());
  Value hidden = g.input(VectorXd::Zero(cfg.recurrent_dim));

  Value bc_sum, recon_sum, kl_sum, sep_m_sum, sep_t_sum, sep_e_sum;
  std::vector<Value> prev_means;

  for (Eigen::Index t = 0; t < steps; ++t) {
    Value x_r = g.input(robot_windows.row(t).transpose());
    Value x_h = g.input(human_windows.row(t).transpose());

    const auto q = model.encode_nodes(g, x_r);
    Value q_std = MoVEIntModel::std_nodes(g, q.log_std);

    const auto mdn = model.mdn_nodes(g, x_h, hidden);
    hidden = mdn.hidden;
    auto [p_mean, p_var] = MoVEIntModel::combine_nodes(g, mdn);
    Value p_std = g.sqrt(p_var);

    // analytic KL(q || p)
    Value diff = g.sub(q.mean, p_mean);
    Value num = g.add(g.cmul(q_std, q_std), g.cmul(diff, diff));
    Value frac = g.cdiv(num, g.affine(p_var, 2.0, 0.0));
    Value log_ratio = g.sub(g.log(p_std), g.log(q_std));
    Value kl = g.affine(g.sum(g.add(log_ratio, frac)), 1.0, -0.5 * L);

    // posterior reconstruction (Monte Carlo)
    std::vector<Value> recon_samples;
    for (int s = 0; s < S; ++s) {
      Value z = g.add(q.mean, g.cmul(q_std, g.input(eps_q[t][s])));
      Value err = g.sub(x_r, model.decode_nodes(g, z));
      recon_samples.push_back(g.affine(g.dot(err, err), -0.5, 0.0));
    }
    Value recon = mean_of(g, recon_samples);

    // behavior cloning: reconstruct prior samples
    std::vector<Value> bc_samples;
    for (int s = 0; s < S; ++s) {
      Value z = g.add(p_mean, g.cmul(p_std, g.input(eps_p[t][s])));
      Value err = g.sub(x_r, model.decode_nodes(g, z));
      bc_samples.push_back(g.affine(g.dot(err, err), 0.5, 0.0));
    }
    Value bc = mean_of(g, bc_samples);

    // separation terms over the mixture's latent means
    Value sep_m, sep_t, sep_e;
    const int n = cfg.n_components;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        Value d = g.sub(mdn.comps[i].mean, mdn.comps[j].mean);
        Value e = g.exp(g.affine(g.dot(d, d), -1.0, 0.0));
        sep_m = sep_m.valid() ? g.add(sep_m, e) : e;
      }
    if (n == 1) sep_m = g.input(MatrixXd::Zero(1, 1));
    if (t > 0) {
      Value closeness;
      for (int i = 0; i < n; ++i) {
        Value d = g.sub(mdn.comps[i].mean, prev_means[i]);
        Value e = g.exp(g.affine(g.dot(d, d), -1.0, 0.0));
        closeness = closeness.valid() ? g.add(closeness, e) : e;
      }
      sep_t = g.affine(closeness, -1.0 / n, 1.0);
    } else {
      sep_t = g.input(MatrixXd::Zero(1, 1));
    }
    sep_e = g.dot(mdn.alphas, g.log(mdn.alphas));

    prev_means.clear();
    for (const auto& c : mdn.comps) prev_means.push_back(c.mean);

    auto accum = [&g](Value& acc, Value x) { acc = acc.valid() ? g.add(acc, x) : x; };
    accum(bc_sum, bc);
    accum(recon_sum, recon);
    accum(kl_sum, kl);
    accum(sep_m_sum, sep_m);
    accum(sep_t_sum, sep_t);
    accum(sep_e_sum, sep_e);
  }

  Value elbo_sum = g.sub(recon_sum, g.affine(kl_sum, options.beta, 0.0));
  Value total = g.sub(bc_sum, elbo_sum);
  if (options.separation_enabled) {
    Value sep = g.add(g.add(sep_m_sum, sep_t_sum), sep_e_sum);
    total = g.add(total, g.affine(sep, options.beta, 0.0));
  }

  if (grads != nullptr) {
    g.backward(total);
    *grads = g.param_grads();
  }

  LossBreakdown out;
  out.bc = g.scalar(bc_sum);
  out.recon = g.scalar(recon_sum);
  out.kl = g.scalar(kl_sum);
  out.sep_means = g.scalar(sep_m_sum);
  out.sep_temporal = g.scalar(sep_t_sum);
  out.sep_entropy = g.scalar(sep_e_sum);
  out.total = g.scalar(total);
  return out;
}

}  // namespace moveint::losses
