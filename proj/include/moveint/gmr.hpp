#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "moveint/common.hpp"

namespace moveint::gmr {

// Full-covariance Gaussian, used for HMM emission states.
struct Gaussian {
  VectorXd mean;
  MatrixXd cov;

  double log_density(const VectorXd& x) const;
};

// One mixture component over the stacked (human, robot) space, stored by
// blocks: mean [mu_h; mu_r], covariance [[Sigma_hh, Sigma_hr], [Sigma_rh, Sigma_rr]].
struct JointGaussianComponent {
  VectorXd mu_h;
  VectorXd mu_r;
  MatrixXd sigma_hh;
  MatrixXd sigma_hr;
  MatrixXd sigma_rh;
  MatrixXd sigma_rr;

  Eigen::Index human_dim() const { return mu_h.size(); }
  Eigen::Index robot_dim() const { return mu_r.size(); }

  MatrixXd assembled_cov() const;
  VectorXd assembled_mean() const;

  // Checks block shapes, Sigma_rh == Sigma_hr^T, symmetry and positive
  // definiteness of the assembled covariance (eigenvalue tolerance 1e-9).
  void validate() const;
};

struct JointGMM {
  std::vector<JointGaussianComponent> components;
  VectorXd priors;

  int size() const { return static_cast<int>(components.size()); }
  void validate() const;  // priors nonnegative, sum to 1 within 1e-9
};

struct Conditional {
  VectorXd mean;
  MatrixXd cov;
};

// Conditions the joint mixture on an observed human-side vector with
// externally supplied component weights. Returns the blended conditional
// mean and covariance, spread-of-means term included.
Conditional condition_gmm(const JointGMM& gmm, const VectorXd& z_h, const VectorXd& alphas);

// Algebraically rearranged form of the blended conditional covariance:
//   sum_i a_i (Sigma_rr_i - K_i Sigma_hr_i + m_i m_i^T) - m m^T.
// Must agree with condition_gmm's covariance to round-off.
MatrixXd simplified_covariance(const JointGMM& gmm, const VectorXd& z_h, const VectorXd& alphas);

struct HMMSpec {
  std::vector<Gaussian> states;
  MatrixXd transition;  // row-stochastic, transition(j, i) = P(j -> i)
  VectorXd initial;

  int size() const { return static_cast<int>(states.size()); }
  void validate() const;
};

// Scaled forward recursion over a T x d observation sequence, computed in
// log space. Row t is the filtering distribution over states given
// observations 0..t; every row sums to 1.
MatrixXd hmm_forward_coefficients(const MatrixXd& observations, const HMMSpec& hmm);

// JSON fixture round-trip.
nlohmann::json to_json(const JointGMM& gmm);
JointGMM gmm_from_json(const nlohmann::json& j);
nlohmann::json to_json(const HMMSpec& hmm);
HMMSpec hmm_from_json(const nlohmann::json& j);

// Random well-conditioned fixtures for property suites.
VectorXd random_simplex(Rng& rng, int n);
JointGaussianComponent random_joint_component(Rng& rng, int d_h, int d_r);
JointGMM random_joint_gmm(Rng& rng, int n_components, int d_h, int d_r);

struct OracleReport {
  double max_identity_residual = 0.0;   // |simplified_covariance - condition_gmm cov|
  double max_affinity_residual = 0.0;   // conditional mean affinity in z_h
  double max_symmetry_residual = 0.0;   // covariance symmetry
  double min_eigenvalue = 0.0;          // most negative conditional-covariance eigenvalue
  double max_simplex_residual = 0.0;    // forward coefficient rows vs the simplex
  int cases = 0;
};

// Randomized property sweep over condition_gmm / simplified_covariance /
// hmm_forward_coefficients; backs the oracle-check command.
OracleReport run_oracle_suite(std::uint64_t seed, int cases);

}  // namespace moveint::gmr
