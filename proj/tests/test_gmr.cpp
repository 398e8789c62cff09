#include <doctest.h>

#include <nlohmann/json.hpp>

#include "moveint/gmr.hpp"
#include "oracles.hpp"

using namespace moveint;
using gmr::JointGaussianComponent;
using gmr::JointGMM;

namespace {

JointGaussianComponent component_1d(double mu_h, double mu_r, double s_hh, double s_hr,
                                    double s_rr) {
  JointGaussianComponent c;
  c.mu_h = VectorXd::Constant(1, mu_h);
  c.mu_r = VectorXd::Constant(1, mu_r);
  c.sigma_hh = MatrixXd::Constant(1, 1, s_hh);
  c.sigma_hr = MatrixXd::Constant(1, 1, s_hr);
  c.sigma_rh = MatrixXd::Constant(1, 1, s_hr);
  c.sigma_rr = MatrixXd::Constant(1, 1, s_rr);
  return c;
}

}  // namespace

TEST_CASE("conditioning with a zero cross block returns the robot marginal") {
  JointGMM gmm;
  gmm.components.push_back(component_1d(0.7, -1.2, 2.0, 0.0, 1.5));
  gmm.priors = VectorXd::Ones(1);
  gmm.validate();

  const auto cond = gmr::condition_gmm(gmm, VectorXd::Constant(1, 3.0), VectorXd::Ones(1));
  CHECK(cond.mean(0) == doctest::Approx(-1.2).epsilon(1e-15));
  CHECK(cond.cov(0, 0) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("conditioning at the human mean leaves the robot mean untouched") {
  Rng rng(11);
  const JointGMM gmm = gmr::random_joint_gmm(rng, 1, 3, 2);
  const auto cond = gmr::condition_gmm(gmm, gmm.components[0].mu_h, VectorXd::Ones(1));
  CHECK((cond.mean - gmm.components[0].mu_r).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-component 1-D conditional matches the sampling oracle") {
  JointGMM gmm;
  gmm.components.push_back(component_1d(-1.0, -0.5, 1.0, 0.6, 1.0));
  gmm.components.push_back(component_1d(1.5, 2.0, 0.8, -0.4, 0.7));
  gmm.priors = VectorXd::Constant(2, 0.5);
  gmm.validate();

  const VectorXd z = VectorXd::Constant(1, 0.4);
  const VectorXd alphas = oracles::responsibilities_at(gmm, z);
  const auto cond = gmr::condition_gmm(gmm, z, alphas);

  Rng rng(2024);
  const auto mc = oracles::mc_conditional(gmm, z, 0.02, 400000, rng);
  REQUIRE(mc.selected > 1000);
  CHECK(std::abs(cond.mean(0) - mc.mean(0)) < 3.0 * mc.mean_se(0));
  CHECK(std::abs(cond.cov(0, 0) - mc.cov(0, 0)) < 3.0 * mc.cov_se(0, 0));
}

TEST_CASE("rearranged covariance equals the direct form") {
  Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const JointGMM gmm = gmr::random_joint_gmm(rng, 3, 2, 2);
    const VectorXd alphas = gmr::random_simplex(rng, 3);
    const VectorXd z = 2.0 * rng.normal_vector(2);
    const MatrixXd direct = gmr::condition_gmm(gmm, z, alphas).cov;
    const MatrixXd rearranged = gmr::simplified_covariance(gmm, z, alphas);
    CHECK((direct - rearranged).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("single component: both covariance forms drop the spread term") {
  Rng rng(7);
  const JointGMM gmm = gmr::random_joint_gmm(rng, 1, 2, 3);
  const VectorXd z = rng.normal_vector(2);

  // hand-computed conditional covariance of the lone component
  const auto& c = gmm.components[0];
  const MatrixXd gain = c.sigma_rh * c.sigma_hh.inverse();
  const MatrixXd expected = c.sigma_rr - gain * c.sigma_hr;

  const auto cond = gmr::condition_gmm(gmm, z, VectorXd::Ones(1));
  CHECK((cond.cov - expected).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((gmr::simplified_covariance(gmm, z, VectorXd::Ones(1)) - expected).cwiseAbs().maxCoeff() <
        1e-10);
}

TEST_CASE("one-hot weights give that component's conditional covariance") {
  Rng rng(13);
  const JointGMM gmm = gmr::random_joint_gmm(rng, 3, 2, 2);
  const VectorXd z = rng.normal_vector(2);
  VectorXd onehot = VectorXd::Zero(3);
  onehot(1) = 1.0;

  const auto& c = gmm.components[1];
  const MatrixXd gain = c.sigma_rh * c.sigma_hh.inverse();
  const MatrixXd expected = c.sigma_rr - gain * c.sigma_hr;
  CHECK((gmr::condition_gmm(gmm, z, onehot).cov - expected).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((gmr::simplified_covariance(gmm, z, onehot) - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("conditional mean is affine in the query") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const JointGMM gmm = gmr::random_joint_gmm(rng, 2, 2, 2);
    const VectorXd alphas = gmr::random_simplex(rng, 2);
    const VectorXd za = rng.normal_vector(2), zb = rng.normal_vector(2);
    const VectorXd mid = gmr::condition_gmm(gmm, 0.5 * (za + zb), alphas).mean;
    const VectorXd avg = 0.5 * (gmr::condition_gmm(gmm, za, alphas).mean +
                                gmr::condition_gmm(gmm, zb, alphas).mean);
    CHECK((mid - avg).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("conditional covariance is symmetric and PSD") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const JointGMM gmm = gmr::random_joint_gmm(rng, 3, 3, 3);
    const auto cond = gmr::condition_gmm(gmm, rng.normal_vector(3), gmr::random_simplex(rng, 3));
    CHECK((cond.cov - cond.cov.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cond.cov, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().minCoeff() > -1e-9);
  }
}

TEST_CASE("component validation rejects broken covariances") {
  JointGaussianComponent c = component_1d(0.0, 0.0, 1.0, 0.3, 1.0);
  CHECK_NOTHROW(c.validate());

  JointGaussianComponent asym = c;
  asym.sigma_rh(0, 0) = 0.5;  // != sigma_hr^T
  CHECK_THROWS_AS(asym.validate(), std::invalid_argument);

  JointGaussianComponent indef = component_1d(0.0, 0.0, 1.0, 2.0, 1.0);  // |corr| > 1
  CHECK_THROWS_AS(indef.validate(), std::invalid_argument);

  JointGMM gmm;
  gmm.components.push_back(c);
  gmm.priors = VectorXd::Constant(1, 0.9);
  CHECK_THROWS_AS(gmm.validate(), std::invalid_argument);
}

TEST_CASE("singular observed block reports the component index") {
  JointGMM gmm;
  gmm.components.push_back(component_1d(0.0, 0.0, 1.0, 0.2, 1.0));
  JointGaussianComponent broken = component_1d(0.0, 0.0, -1.0, 0.0, 1.0);
  gmm.components.push_back(broken);
  gmm.priors = VectorXd::Constant(2, 0.5);

  try {
    gmr::condition_gmm(gmm, VectorXd::Zero(1), VectorXd::Constant(2, 0.5));
    FAIL("expected a numerical error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("component 1") != std::string::npos);
  }
}

TEST_CASE("forward coefficients: single state is always certain") {
  gmr::HMMSpec hmm;
  hmm.states.push_back({VectorXd::Zero(1), MatrixXd::Identity(1, 1)});
  hmm.transition = MatrixXd::Ones(1, 1);
  hmm.initial = VectorXd::Ones(1);

  MatrixXd obs(4, 1);
  obs << 0.3, -1.0, 2.0, 0.0;
  const MatrixXd coeffs = gmr::hmm_forward_coefficients(obs, hmm);
  CHECK(coeffs.rows() == 4);
  for (int t = 0; t < 4; ++t) CHECK(coeffs(t, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("forward coefficients: identical emissions reduce to the chain power") {
  gmr::Gaussian shared{VectorXd::Zero(1), MatrixXd::Identity(1, 1)};
  gmr::HMMSpec hmm;
  hmm.states = {shared, shared};
  hmm.transition.resize(2, 2);
  hmm.transition << 0.9, 0.1, 0.3, 0.7;
  hmm.initial.resize(2);
  hmm.initial << 0.6, 0.4;

  MatrixXd obs = MatrixXd::Zero(5, 1);
  const MatrixXd coeffs = gmr::hmm_forward_coefficients(obs, hmm);

  Eigen::RowVector2d expected = hmm.initial.transpose();
  for (int t = 0; t < 5; ++t) {
    CHECK((coeffs.row(t) - expected).cwiseAbs().maxCoeff() < 1e-12);
    expected = expected * hmm.transition;
  }
}

TEST_CASE("forward coefficients match brute-force path enumeration") {
  Rng rng(314);
  gmr::HMMSpec hmm;
  hmm.states.push_back({VectorXd::Constant(1, -1.0), MatrixXd::Constant(1, 1, 0.5)});
  hmm.states.push_back({VectorXd::Constant(1, 1.5), MatrixXd::Constant(1, 1, 1.2)});
  hmm.transition.resize(2, 2);
  hmm.transition << 0.8, 0.2, 0.4, 0.6;
  hmm.initial.resize(2);
  hmm.initial << 0.5, 0.5;

  MatrixXd obs(3, 1);
  obs << -0.8, 0.3, 1.9;
  const MatrixXd coeffs = gmr::hmm_forward_coefficients(obs, hmm);
  for (int t = 0; t < 3; ++t) {
    const VectorXd brute = oracles::brute_force_filter(obs, hmm, t);
    CHECK((coeffs.row(t).transpose() - brute).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("forward coefficient rows stay on the simplex") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    gmr::HMMSpec hmm;
    const int n = rng.uniform_int(1, 3);
    for (int i = 0; i < n; ++i) {
      MatrixXd a(2, 2);
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) a(r, c) = rng.normal();
      hmm.states.push_back(
          {rng.normal_vector(2), a * a.transpose() + 0.5 * MatrixXd::Identity(2, 2)});
    }
    hmm.transition.resize(n, n);
    for (int r = 0; r < n; ++r) hmm.transition.row(r) = gmr::random_simplex(rng, n).transpose();
    hmm.initial = gmr::random_simplex(rng, n);

    MatrixXd obs(30, 2);
    for (int t = 0; t < 30; ++t) obs.row(t) = (5.0 * rng.normal_vector(2)).transpose();
    const MatrixXd coeffs = gmr::hmm_forward_coefficients(obs, hmm);
    for (int t = 0; t < coeffs.rows(); ++t) {
      CHECK(coeffs.row(t).minCoeff() >= 0.0);
      CHECK(std::abs(coeffs.row(t).sum() - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("json fixtures round-trip") {
  Rng rng(8);
  const JointGMM gmm = gmr::random_joint_gmm(rng, 2, 2, 1);
  const JointGMM back = gmr::gmm_from_json(gmr::to_json(gmm));
  CHECK((back.priors - gmm.priors).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.components[1].sigma_hr - gmm.components[1].sigma_hr).cwiseAbs().maxCoeff() == 0.0);

  gmr::HMMSpec hmm;
  hmm.states.push_back({VectorXd::Zero(2), MatrixXd::Identity(2, 2)});
  hmm.transition = MatrixXd::Ones(1, 1);
  hmm.initial = VectorXd::Ones(1);
  const gmr::HMMSpec hback = gmr::hmm_from_json(gmr::to_json(hmm));
  CHECK((hback.states[0].mean - hmm.states[0].mean).cwiseAbs().maxCoeff() == 0.0);
}
