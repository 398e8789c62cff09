#include "moveint/gmr.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

namespace moveint::gmr {

namespace {

constexpr double kPdTolerance = 1e-9;

MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.size();
  if (rows == 0) return MatrixXd(0, 0);
  const auto cols = j.at(0).size();
  MatrixXd m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (j.at(r).size() != cols) throw std::invalid_argument("ragged matrix in JSON");
    for (size_t c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

nlohmann::json matrix_to_json(const MatrixXd& m) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(row);
  }
  return j;
}

VectorXd vector_from_json(const nlohmann::json& j) {
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}

nlohmann::json vector_to_json(const VectorXd& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

void check_weights(const VectorXd& alphas, int n, double tol, const char* what) {
  if (alphas.size() != n) throw std::invalid_argument(std::string(what) + ": wrong length");
  if ((alphas.array() < -tol).any())
    throw std::invalid_argument(std::string(what) + ": negative entry");
  if (std::abs(alphas.sum() - 1.0) > tol)
    throw std::invalid_argument(std::string(what) + ": does not sum to 1");
}

}  // namespace

double Gaussian::log_density(const VectorXd& x) const {
  const Eigen::Index d = mean.size();
  if (x.size() != d) throw std::invalid_argument("Gaussian::log_density: dimension mismatch");
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("Gaussian::log_density: covariance not positive definite");
  const VectorXd diff = x - mean;
  const VectorXd half = llt.matrixL().solve(diff);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
  return -0.5 * (d * std::log(2.0 * M_PI) + log_det + half.squaredNorm());
}

MatrixXd JointGaussianComponent::assembled_cov() const {
  const Eigen::Index dh = human_dim(), dr = robot_dim();
  MatrixXd full(dh + dr, dh + dr);
  full.topLeftCorner(dh, dh) = sigma_hh;
  full.topRightCorner(dh, dr) = sigma_hr;
  full.bottomLeftCorner(dr, dh) = sigma_rh;
  full.bottomRightCorner(dr, dr) = sigma_rr;
  return full;
}

VectorXd JointGaussianComponent::assembled_mean() const {
  VectorXd full(human_dim() + robot_dim());
  full << mu_h, mu_r;
  return full;
}

void JointGaussianComponent::validate() const {
  const Eigen::Index dh = human_dim(), dr = robot_dim();
  if (sigma_hh.rows() != dh || sigma_hh.cols() != dh || sigma_rr.rows() != dr ||
      sigma_rr.cols() != dr || sigma_hr.rows() != dh || sigma_hr.cols() != dr ||
      sigma_rh.rows() != dr || sigma_rh.cols() != dh)
    throw std::invalid_argument("JointGaussianComponent: block shape mismatch");
  if ((sigma_rh - sigma_hr.transpose()).cwiseAbs().maxCoeff() > kPdTolerance)
    throw std::invalid_argument("JointGaussianComponent: Sigma_rh != Sigma_hr^T");
  const MatrixXd full = assembled_cov();
  if ((full - full.transpose()).cwiseAbs().maxCoeff() > kPdTolerance)
    throw std::invalid_argument("JointGaussianComponent: covariance not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(full, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= kPdTolerance)
    throw std::invalid_argument("JointGaussianComponent: covariance not positive definite");
}

void JointGMM::validate() const {
  if (components.empty()) throw std::invalid_argument("JointGMM: no components");
  check_weights(priors, size(), 1e-9, "JointGMM priors");
  const Eigen::Index dh = components.front().human_dim();
  const Eigen::Index dr = components.front().robot_dim();
  for (const auto& c : components) {
    if (c.human_dim() != dh || c.robot_dim() != dr)
      throw std::invalid_argument("JointGMM: inconsistent component dimensions");
    c.validate();
  }
}

namespace {

struct ComponentConditional {
  VectorXd mean;      // mu_r + K (z_h - mu_h)
  MatrixXd base_cov;  // Sigma_rr - K Sigma_hr
};

ComponentConditional condition_component(const JointGaussianComponent& c, const VectorXd& z_h,
                                         int index) {
  Eigen::LLT<MatrixXd> llt(c.sigma_hh);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("condition_gmm: singular Sigma_hh in component " +
                             std::to_string(index));
  const MatrixXd gain = llt.solve(c.sigma_rh.transpose()).transpose();  // K = Sigma_rh Sigma_hh^-1
  ComponentConditional out;
  out.mean = c.mu_r + gain * (z_h - c.mu_h);
  out.base_cov = c.sigma_rr - gain * c.sigma_hr;
  return out;
}

}  // namespace

Conditional condition_gmm(const JointGMM& gmm, const VectorXd& z_h, const VectorXd& alphas) {
  const int n = gmm.size();
  check_weights(alphas, n, 1e-6, "condition_gmm alphas");
  if (z_h.size() != gmm.components.front().human_dim())
    throw std::invalid_argument("condition_gmm: query dimension mismatch");

  std::vector<ComponentConditional> parts;
  parts.reserve(n);
  for (int i = 0; i < n; ++i) parts.push_back(condition_component(gmm.components[i], z_h, i));

  const Eigen::Index dr = gmm.components.front().robot_dim();
  VectorXd mean = VectorXd::Zero(dr);
  for (int i = 0; i < n; ++i) mean += alphas(i) * parts[i].mean;

  MatrixXd cov = MatrixXd::Zero(dr, dr);
  for (int i = 0; i < n; ++i) {
    const VectorXd d = parts[i].mean - mean;
    cov += alphas(i) * (parts[i].base_cov + d * d.transpose());
  }
  cov = 0.5 * (cov + cov.transpose());
  return {mean, cov};
}

MatrixXd simplified_covariance(const JointGMM& gmm, const VectorXd& z_h, const VectorXd& alphas) {
  const int n = gmm.size();
  check_weights(alphas, n, 1e-6, "simplified_covariance alphas");
  if (z_h.size() != gmm.components.front().human_dim())
    throw std::invalid_argument("simplified_covariance: query dimension mismatch");

  const Eigen::Index dr = gmm.components.front().robot_dim();
  VectorXd blended_mean = VectorXd::Zero(dr);
  MatrixXd acc = MatrixXd::Zero(dr, dr);
  for (int i = 0; i < n; ++i) {
    const ComponentConditional part = condition_component(gmm.components[i], z_h, i);
    blended_mean += alphas(i) * part.mean;
    acc += alphas(i) * (part.base_cov + part.mean * part.mean.transpose());
  }
  MatrixXd cov = acc - blended_mean * blended_mean.transpose();
  cov = 0.5 * (cov + cov.transpose());
  return cov;
}

void HMMSpec::validate() const {
  const int n = size();
  if (n == 0) throw std::invalid_argument("HMMSpec: no states");
  if (transition.rows() != n || transition.cols() != n)
    throw std::invalid_argument("HMMSpec: transition shape mismatch");
  if ((transition.array() < -1e-12).any())
    throw std::invalid_argument("HMMSpec: negative transition probability");
  for (int r = 0; r < n; ++r)
    if (std::abs(transition.row(r).sum() - 1.0) > 1e-9)
      throw std::invalid_argument("HMMSpec: transition row " + std::to_string(r) +
                                  " does not sum to 1");
  check_weights(initial, n, 1e-9, "HMMSpec initial");
}

MatrixXd hmm_forward_coefficients(const MatrixXd& observations, const HMMSpec& hmm) {
  hmm.validate();
  const Eigen::Index steps = observations.rows();
  const int n = hmm.size();
  if (steps == 0) throw std::invalid_argument("hmm_forward_coefficients: empty observations");
  if (!observations.allFinite())
    throw std::invalid_argument("hmm_forward_coefficients: non-finite observation");

  const MatrixXd log_trans = hmm.transition.array().log().matrix();  // log 0 = -inf is fine
  MatrixXd coeffs(steps, n);
  VectorXd log_alpha(n);

  for (Eigen::Index t = 0; t < steps; ++t) {
    VectorXd log_next(n);
    for (int i = 0; i < n; ++i) {
      const double emit = hmm.states[i].log_density(observations.row(t).transpose());
      if (t == 0) {
        log_next(i) = std::log(hmm.initial(i)) + emit;
      } else {
        log_next(i) = emit + log_sum_exp(log_alpha + log_trans.col(i));
      }
    }
    log_next.array() -= log_sum_exp(log_next);
    log_alpha = log_next;
    coeffs.row(t) = log_alpha.array().exp().matrix().transpose();
  }
  return coeffs;
}

VectorXd random_simplex(Rng& rng, int n) {
  VectorXd w(n);
  for (int i = 0; i < n; ++i) w(i) = -std::log(1.0 - rng.uniform());
  return w / w.sum();
}

JointGaussianComponent random_joint_component(Rng& rng, int d_h, int d_r) {
  const int d = d_h + d_r;
  MatrixXd a(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) a(r, c) = rng.normal();
  const MatrixXd cov = a * a.transpose() + (0.3 + rng.uniform()) * MatrixXd::Identity(d, d);

  JointGaussianComponent comp;
  comp.mu_h = 2.0 * rng.normal_vector(d_h);
  comp.mu_r = 2.0 * rng.normal_vector(d_r);
  comp.sigma_hh = cov.topLeftCorner(d_h, d_h);
  comp.sigma_hr = cov.topRightCorner(d_h, d_r);
  comp.sigma_rh = cov.bottomLeftCorner(d_r, d_h);
  comp.sigma_rr = cov.bottomRightCorner(d_r, d_r);
  return comp;
}

JointGMM random_joint_gmm(Rng& rng, int n_components, int d_h, int d_r) {
  JointGMM gmm;
  for (int i = 0; i < n_components; ++i)
    gmm.components.push_back(random_joint_component(rng, d_h, d_r));
  gmm.priors = random_simplex(rng, n_components);
  gmm.validate();
  return gmm;
}

OracleReport run_oracle_suite(std::uint64_t seed, int cases) {
  Rng rng(mix_seed(seed, 0x474d5243));  // "GMRC"
  OracleReport report;
  report.cases = cases;
  const int sizes[] = {1, 2, 3, 5};

  for (int k = 0; k < cases; ++k) {
    const int n = sizes[k % 4];
    const int d_h = rng.uniform_int(1, 4);
    const int d_r = rng.uniform_int(1, 4);
    const JointGMM gmm = random_joint_gmm(rng, n, d_h, d_r);
    const VectorXd alphas = random_simplex(rng, n);

    const VectorXd z_a = 2.0 * rng.normal_vector(d_h);
    const VectorXd z_b = 2.0 * rng.normal_vector(d_h);
    const Conditional cond = condition_gmm(gmm, z_a, alphas);
    const MatrixXd simplified = simplified_covariance(gmm, z_a, alphas);

    report.max_identity_residual = std::max(report.max_identity_residual,
                                            (cond.cov - simplified).cwiseAbs().maxCoeff());
    report.max_symmetry_residual = std::max(
        report.max_symmetry_residual, (cond.cov - cond.cov.transpose()).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cond.cov, Eigen::EigenvaluesOnly);
    report.min_eigenvalue = std::min(report.min_eigenvalue, eig.eigenvalues().minCoeff());

    // conditional mean is affine in the query for fixed weights
    const VectorXd mid = condition_gmm(gmm, 0.5 * (z_a + z_b), alphas).mean;
    const VectorXd avg = 0.5 * (cond.mean + condition_gmm(gmm, z_b, alphas).mean);
    report.max_affinity_residual =
        std::max(report.max_affinity_residual, (mid - avg).cwiseAbs().maxCoeff());
  }

  // forward coefficients stay on the simplex
  Rng hmm_rng(mix_seed(seed, 0x484d4d43));  // "HMMC"
  for (int k = 0; k < std::max(1, cases / 10); ++k) {
    const int n = hmm_rng.uniform_int(1, 3);
    const int d = hmm_rng.uniform_int(1, 2);
    HMMSpec hmm;
    for (int i = 0; i < n; ++i) {
      MatrixXd a(d, d);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) a(r, c) = hmm_rng.normal();
      hmm.states.push_back(
          {hmm_rng.normal_vector(d), a * a.transpose() + 0.5 * MatrixXd::Identity(d, d)});
    }
    hmm.transition.resize(n, n);
    for (int r = 0; r < n; ++r) hmm.transition.row(r) = random_simplex(hmm_rng, n).transpose();
    hmm.initial = random_simplex(hmm_rng, n);

    const int steps = hmm_rng.uniform_int(3, 12);
    MatrixXd obs(steps, d);
    for (int t = 0; t < steps; ++t) obs.row(t) = hmm_rng.normal_vector(d).transpose();
    const MatrixXd coeffs = hmm_forward_coefficients(obs, hmm);
    for (int t = 0; t < steps; ++t) {
      report.max_simplex_residual =
          std::max(report.max_simplex_residual, std::abs(coeffs.row(t).sum() - 1.0));
      report.max_simplex_residual =
          std::max(report.max_simplex_residual, std::max(0.0, -coeffs.row(t).minCoeff()));
    }
  }
  return report;
}

nlohmann::json to_json(const JointGMM& gmm) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : gmm.components) {
    comps.push_back({{"mu_h", vector_to_json(c.mu_h)},
                     {"mu_r", vector_to_json(c.mu_r)},
                     {"sigma_hh", matrix_to_json(c.sigma_hh)},
                     {"sigma_hr", matrix_to_json(c.sigma_hr)},
                     {"sigma_rh", matrix_to_json(c.sigma_rh)},
                     {"sigma_rr", matrix_to_json(c.sigma_rr)}});
  }
  return {{"components", comps}, {"priors", vector_to_json(gmm.priors)}};
}

JointGMM gmm_from_json(const nlohmann::json& j) {
  JointGMM gmm;
  for (const auto& c : j.at("components")) {
    JointGaussianComponent comp;
    comp.mu_h = vector_from_json(c.at("mu_h"));
    comp.mu_r = vector_from_json(c.at("mu_r"));
    comp.sigma_hh = matrix_from_json(c.at("sigma_hh"));
    comp.sigma_hr = matrix_from_json(c.at("sigma_hr"));
    comp.sigma_rh = matrix_from_json(c.at("sigma_rh"));
    comp.sigma_rr = matrix_from_json(c.at("sigma_rr"));
    gmm.components.push_back(std::move(comp));
  }
  gmm.priors = vector_from_json(j.at("priors"));
  gmm.validate();
  return gmm;
}

nlohmann::json to_json(const HMMSpec& hmm) {
  nlohmann::json states = nlohmann::json::array();
  for (const auto& s : hmm.states)
    states.push_back({{"mean", vector_to_json(s.mean)}, {"cov", matrix_to_json(s.cov)}});
  return {{"states", states},
          {"transition", matrix_to_json(hmm.transition)},
          {"initial", vector_to_json(hmm.initial)}};
}

HMMSpec hmm_from_json(const nlohmann::json& j) {
  HMMSpec hmm;
  for (const auto& s : j.at("states"))
    hmm.states.push_back({vector_from_json(s.at("mean")), matrix_from_json(s.at("cov"))});
  hmm.transition = matrix_from_json(j.at("transition"));
  hmm.initial = vector_from_json(j.at("initial"));
  hmm.validate();
  return hmm;
}

}  // namespace moveint::gmr
