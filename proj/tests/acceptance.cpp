// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line with
// its measured values; the process exits nonzero if any criterion fails.
// Criterion 8 is conditional on an externally supplied motion-capture
// dataset (MOVEINT_HHI_DATASET); without it the remaining criteria are the
// acceptance gate and 8 reports SKIP.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "moveint/dataset.hpp"
#include "moveint/evaluation.hpp"
#include "moveint/gmr.hpp"
#include "moveint/inference.hpp"
#include "moveint/losses.hpp"
#include "moveint/training.hpp"
#include "oracles.hpp"

using namespace moveint;

namespace {

int g_failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("[%d] %-28s %s  (%s)\n", id, name, pass ? "PASS" : "FAIL", detail.c_str());
  if (!pass) ++g_failures;
}

void report_skip(int id, const char* name, const std::string& detail) {
  std::printf("[%d] %-28s SKIP  (%s)\n", id, name, detail.c_str());
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------- criterion 1
void criterion_appendix_identity() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(0);
  const int sizes[] = {1, 2, 3, 5};
  double worst = 0.0;
  const int cases = 1000;
  for (int k = 0; k < cases; ++k) {
    const int n = sizes[k % 4];
    const int d_h = rng.uniform_int(1, 4);
    const int d_r = rng.uniform_int(1, 4);
    const gmr::JointGMM gmm = gmr::random_joint_gmm(rng, n, d_h, d_r);
    const VectorXd alphas = gmr::random_simplex(rng, n);
    const VectorXd z = 2.0 * rng.normal_vector(d_h);
    const MatrixXd direct = gmr::condition_gmm(gmm, z, alphas).cov;
    const MatrixXd rearranged = gmr::simplified_covariance(gmm, z, alphas);
    worst = std::max(worst, (direct - rearranged).cwiseAbs().maxCoeff());
  }
  const double elapsed = seconds_since(start);
  char detail[128];
  std::snprintf(detail, sizeof(detail), "max residual %.2e over %d mixtures, %.1f s", worst,
                cases, elapsed);
  report(1, "covariance identity", worst < 1e-8 && elapsed < 30.0, detail);
}

// ---------------------------------------------------------------- criterion 2
void criterion_mc_conditionals() {
  struct Fixture {
    gmr::JointGMM gmm;
    VectorXd query;
    double window;
  };
  std::vector<Fixture> fixtures;

  auto comp1d = [](double mh, double mr, double shh, double shr, double srr) {
    gmr::JointGaussianComponent c;
    c.mu_h = VectorXd::Constant(1, mh);
    c.mu_r = VectorXd::Constant(1, mr);
    c.sigma_hh = MatrixXd::Constant(1, 1, shh);
    c.sigma_hr = MatrixXd::Constant(1, 1, shr);
    c.sigma_rh = MatrixXd::Constant(1, 1, shr);
    c.sigma_rr = MatrixXd::Constant(1, 1, srr);
    return c;
  };
  auto add1d = [&](std::vector<gmr::JointGaussianComponent> comps, VectorXd priors, double q,
                   double window) {
    gmr::JointGMM g;
    g.components = std::move(comps);
    g.priors = std::move(priors);
    g.validate();
    fixtures.push_back({std::move(g), VectorXd::Constant(1, q), window});
  };

  // 1-D fixtures: single, balanced pair, skewed pair, three modes
  add1d({comp1d(0.0, 0.0, 1.0, 0.7, 1.0)}, VectorXd::Ones(1), 0.5, 0.04);
  add1d({comp1d(-1.0, -0.5, 1.0, 0.6, 1.0), comp1d(1.5, 2.0, 0.8, -0.4, 0.7)},
        VectorXd::Constant(2, 0.5), 0.4, 0.04);
  add1d({comp1d(-0.5, 1.0, 0.6, 0.3, 0.9), comp1d(0.8, -1.0, 1.2, 0.5, 1.1)},
        (VectorXd(2) << 0.7, 0.3).finished(), 0.0, 0.04);
  add1d({comp1d(-2.0, -1.0, 0.7, 0.4, 0.8), comp1d(0.0, 0.5, 0.9, -0.3, 0.6),
         comp1d(2.0, 1.5, 0.8, 0.5, 1.0)},
        (VectorXd(3) << 0.3, 0.4, 0.3).finished(), 0.3, 0.04);
  add1d({comp1d(0.0, 0.0, 2.0, 1.2, 1.5), comp1d(0.5, 3.0, 1.5, -0.9, 1.2)},
        (VectorXd(2) << 0.45, 0.55).finished(), 0.8, 0.04);

  // 2-D fixtures (2-D human, 2-D robot), hand-picked blocks
  auto comp2d = [](double mh0, double mh1, double mr0, double mr1, double rho) {
    gmr::JointGaussianComponent c;
    c.mu_h = (VectorXd(2) << mh0, mh1).finished();
    c.mu_r = (VectorXd(2) << mr0, mr1).finished();
    c.sigma_hh = (MatrixXd(2, 2) << 1.0, 0.2, 0.2, 0.8).finished();
    c.sigma_hr = (MatrixXd(2, 2) << rho, 0.1, -0.1, rho).finished();
    c.sigma_rh = c.sigma_hr.transpose();
    c.sigma_rr = (MatrixXd(2, 2) << 1.1, 0.15, 0.15, 0.9).finished();
    return c;
  };
  auto add2d = [&](std::vector<gmr::JointGaussianComponent> comps, VectorXd priors, double q0,
                   double q1) {
    gmr::JointGMM g;
    g.components = std::move(comps);
    g.priors = std::move(priors);
    g.validate();
    fixtures.push_back({std::move(g), (VectorXd(2) << q0, q1).finished(), 0.12});
  };
  add2d({comp2d(0, 0, 0, 0, 0.5)}, VectorXd::Ones(1), 0.3, -0.2);
  add2d({comp2d(-1, 0, 1, 1, 0.4), comp2d(1, 0.5, -1, 0, -0.3)}, VectorXd::Constant(2, 0.5), 0.0,
        0.2);
  add2d({comp2d(-0.5, -0.5, 0.5, 1, 0.45), comp2d(0.5, 0.5, -0.5, -1, 0.35)},
        (VectorXd(2) << 0.6, 0.4).finished(), -0.2, -0.3);
  add2d({comp2d(0, 0, 1, -1, 0.5), comp2d(0.3, -0.3, -1, 1, -0.45),
         comp2d(-0.3, 0.3, 0, 0, 0.25)},
        (VectorXd(3) << 0.4, 0.3, 0.3).finished(), 0.1, 0.0);
  add2d({comp2d(1, 1, 2, 0, 0.5), comp2d(-1, -1, -2, 0, 0.5)},
        (VectorXd(2) << 0.5, 0.5).finished(), 0.9, 0.9);

  bool all_pass = true;
  double worst_sigmas = 0.0;
  Rng rng(123);
  for (std::size_t i = 0; i < fixtures.size(); ++i) {
    const auto& f = fixtures[i];
    const VectorXd alphas = oracles::responsibilities_at(f.gmm, f.query);
    const gmr::Conditional cond = gmr::condition_gmm(f.gmm, f.query, alphas);
    const auto mc = oracles::mc_conditional(f.gmm, f.query, f.window, 1000000, rng);
    if (mc.selected < 2000) {
      all_pass = false;
      continue;
    }
    for (Eigen::Index d = 0; d < cond.mean.size(); ++d) {
      const double sigmas = std::abs(cond.mean(d) - mc.mean(d)) / mc.mean_se(d);
      worst_sigmas = std::max(worst_sigmas, sigmas);
      if (sigmas >= 3.0) all_pass = false;
    }
    for (Eigen::Index a = 0; a < cond.cov.rows(); ++a)
      for (Eigen::Index b = 0; b < cond.cov.cols(); ++b) {
        const double sigmas = std::abs(cond.cov(a, b) - mc.cov(a, b)) / mc.cov_se(a, b);
        worst_sigmas = std::max(worst_sigmas, sigmas);
        if (sigmas >= 3.0) all_pass = false;
      }
  }
  char detail[128];
  std::snprintf(detail, sizeof(detail), "10 fixtures, 1e6 samples each, worst moment at %.2f se",
                worst_sigmas);
  report(2, "conditional vs sampling", all_pass, detail);
}

// ---------------------------------------------------------------- criterion 3
void criterion_hmm_brute_force() {
  Rng rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const int n = rng.uniform_int(2, 3);
    const int steps = rng.uniform_int(3, 5);
    gmr::HMMSpec hmm;
    for (int i = 0; i < n; ++i)
      hmm.states.push_back({VectorXd::Constant(1, -2.0 + 4.0 * rng.uniform()),
                            MatrixXd::Constant(1, 1, 0.3 + rng.uniform())});
    hmm.transition.resize(n, n);
    for (int r = 0; r < n; ++r) hmm.transition.row(r) = gmr::random_simplex(rng, n).transpose();
    hmm.initial = gmr::random_simplex(rng, n);

    MatrixXd obs(steps, 1);
    for (int t = 0; t < steps; ++t) obs(t, 0) = 3.0 * rng.normal();

    const MatrixXd coeffs = gmr::hmm_forward_coefficients(obs, hmm);
    for (int t = 0; t < steps; ++t) {
      const VectorXd brute = oracles::brute_force_filter(obs, hmm, t);
      worst = std::max(worst, (coeffs.row(t).transpose() - brute).cwiseAbs().maxCoeff());
    }
  }
  char detail[128];
  std::snprintf(detail, sizeof(detail), "max |forward - enumeration| = %.2e over 25 chains",
                worst);
  report(3, "forward vs enumeration", worst < 1e-10, detail);
}

// ---------------------------------------------------------------- criterion 4
void criterion_gradient_fidelity() {
  const auto start = std::chrono::steady_clock::now();
  ModelConfig cfg;
  cfg.human_dim = 6;
  cfg.robot_dim = 6;
  cfg.latent_dim = 2;
  cfg.n_components = 2;
  cfg.hidden1 = 8;
  cfg.hidden2 = 4;
  cfg.recurrent_dim = 4;
  MoVEIntModel model(cfg, 2);

  Rng rng(12);
  MatrixXd h(4, 6), r(4, 6);
  for (int t = 0; t < 4; ++t) {
    h.row(t) = rng.normal_vector(6).transpose();
    r.row(t) = rng.normal_vector(6).transpose();
  }

  losses::LossOptions opts;
  opts.beta = 0.005;
  opts.n_samples = 1;
  opts.noise_seed = 77;

  std::vector<MatrixXd> grads;
  losses::total_loss(model, h, r, opts, &grads);
  Eigen::Index total = 0;
  for (const auto& g : grads) total += g.size();
  VectorXd analytic(total);
  Eigen::Index off = 0;
  for (const auto& g : grads) {
    analytic.segment(off, g.size()) = Eigen::Map<const VectorXd>(g.data(), g.size());
    off += g.size();
  }

  const VectorXd fd = oracles::finite_difference_gradient(
      model.params(), [&] { return losses::total_loss(model, h, r, opts).total; }, 1e-5);

  double worst = 0.0;
  for (Eigen::Index i = 0; i < total; ++i)
    worst = std::max(worst, oracles::relative_error(analytic(i), fd(i)));
  const double elapsed = seconds_since(start);
  char detail[128];
  std::snprintf(detail, sizeof(detail), "%ld parameters, max rel err %.2e, %.1f s",
                static_cast<long>(total), worst, elapsed);
  report(4, "gradient fidelity", worst < 1e-4 && elapsed < 60.0, detail);
}

// ---------------------------------------------------------------- criterion 5
void criterion_mixture_invariants() {
  Rng rng(33);
  int failures = 0;
  const int cases = 10000;
  for (int trial = 0; trial < cases; ++trial) {
    const int n = rng.uniform_int(2, 4);
    const int d = rng.uniform_int(1, 4);
    MixtureDensity mix;
    for (int i = 0; i < n; ++i)
      mix.components.push_back(
          DiagonalGaussian::from_raw(2.0 * rng.normal_vector(d), rng.normal_vector(d)));
    mix.alphas = gmr::random_simplex(rng, n);

    // one-hot degeneracy
    const int hot = rng.uniform_int(0, n - 1);
    MixtureDensity onehot = mix;
    onehot.alphas = VectorXd::Zero(n);
    onehot.alphas(hot) = 1.0;
    const DiagonalGaussian selected = combine_mixture(onehot);
    if ((selected.mean - mix.components[hot].mean).cwiseAbs().maxCoeff() > 1e-9 ||
        (selected.log_std - mix.components[hot].log_std).cwiseAbs().maxCoeff() > 1e-9)
      ++failures;

    // permutation invariance
    const DiagonalGaussian combined = combine_mixture(mix);
    MixtureDensity rotated;
    VectorXd ra(n);
    for (int i = 0; i < n; ++i) {
      rotated.components.push_back(mix.components[(i + 1) % n]);
      ra(i) = mix.alphas((i + 1) % n);
    }
    rotated.alphas = ra;
    const DiagonalGaussian combined2 = combine_mixture(rotated);
    if ((combined.mean - combined2.mean).cwiseAbs().maxCoeff() > 1e-9) ++failures;

    // convex hull of means, per coordinate
    for (int dd = 0; dd < d; ++dd) {
      double lo = mix.components[0].mean(dd), hi = lo;
      for (const auto& c : mix.components) {
        lo = std::min(lo, c.mean(dd));
        hi = std::max(hi, c.mean(dd));
      }
      if (combined.mean(dd) < lo - 1e-9 || combined.mean(dd) > hi + 1e-9) ++failures;
    }

    // separation terms
    const auto sep = losses::separation_loss(mix, nullptr);
    if (sep.entropy < -std::log(n) - 1e-9 || sep.entropy > 1e-12) ++failures;

    MixtureDensity coincident = mix;
    for (auto& c : coincident.components) c.mean = mix.components[0].mean;
    const auto sat = losses::separation_loss(coincident, nullptr);
    if (std::abs(sat.means - 0.5 * n * (n - 1)) > 1e-9) ++failures;
  }
  char detail[64];
  std::snprintf(detail, sizeof(detail), "%d randomized cases, %d violations", cases, failures);
  report(5, "mixture invariants", failures == 0, detail);
}

// ------------------------------------------------------- criteria 6 and 7
struct TrainedRun {
  train::TrainResult result;
  data::DatasetSplit dataset;
  ModelConfig model_config;
};

TrainedRun train_synth(bool separation_enabled) {
  data::SynthConfig scfg;
  scfg.modes = 2;
  scfg.train_count = 40;
  scfg.test_count = 10;
  scfg.length = 50;
  TrainedRun run;
  run.dataset = data::synth_interaction_dataset(scfg, 0);

  const data::WindowedPair win =
      data::build_windows(run.dataset.train.front(), run.dataset.feature_spec());
  ModelConfig mc;
  mc.human_dim = static_cast<int>(win.human.cols());
  mc.robot_dim = static_cast<int>(win.robot.cols());
  mc.latent_dim = 5;
  mc.n_components = 3;
  mc.hidden1 = 40;
  mc.hidden2 = 20;
  mc.recurrent_dim = 20;
  run.model_config = mc;

  train::TrainConfig tc;
  tc.beta = 0.005;
  tc.epochs = 250;
  tc.seed = 0;
  tc.separation_enabled = separation_enabled;
  run.result = train::train(run.dataset, mc, tc);
  return run;
}

// Mean pairwise distance between component means over the test windows.
double mean_component_distance(const MoVEIntModel& model, const data::DatasetSplit& dataset) {
  const data::FeatureSpec spec = dataset.feature_spec();
  double sum = 0.0;
  long count = 0;
  std::uint64_t stream = 900;
  for (const auto& traj : dataset.test) {
    const MatrixXd features =
        data::assemble_features(traj.human_frames, spec.human_velocities, spec.human_origin_joint);
    const MatrixXd windows = data::window_matrix(features, spec.window);
    RecurrentState state = model.initial_state(stream);
    for (Eigen::Index t = 0; t < windows.rows(); ++t) {
      auto [mix, next] = model.mdn_step(windows.row(t).transpose(), state);
      state = std::move(next);
      for (int i = 0; i < mix.size(); ++i)
        for (int j = i + 1; j < mix.size(); ++j) {
          sum += (mix.components[i].mean - mix.components[j].mean).norm();
          ++count;
        }
    }
    ++stream;
  }
  return sum / count;
}

void criteria_synthetic_end_to_end(const TrainedRun& with_sep, const TrainedRun& without_sep,
                                   double train_seconds) {
  const MoVEIntModel model = with_sep.result.model();
  const data::DatasetSplit& dataset = with_sep.dataset;

  // test MSE vs the constant-mean baseline, pooled over actions
  const auto model_rows = eval::mse_report(model, dataset, data::Units::meters);
  const auto base_rows = eval::baseline_mse(dataset);
  double model_mse = 0.0, base_mse = 0.0;
  int nm = 0;
  for (const auto& r : model_rows) {
    model_mse += r.mean * r.trajectories;
    nm += r.trajectories;
  }
  model_mse /= nm;
  int nb = 0;
  for (const auto& r : base_rows) {
    base_mse += r.mean * r.trajectories;
    nb += r.trajectories;
  }
  base_mse /= nb;

  // steady-state mode agreement: majority component->mode mapping
  const data::FeatureSpec spec = dataset.feature_spec();
  std::map<int, std::map<int, int>> votes;  // component -> mode -> count
  std::vector<std::pair<int, int>> assignments;  // (argmax component, mode label)
  std::uint64_t stream = 0;
  for (const auto& traj : dataset.test) {
    const infer::RolloutResult roll = infer::rollout_trajectory(model, traj, spec, stream++);
    for (Eigen::Index t = 11; t < roll.alpha_trace.rows(); ++t) {
      int argmax = 0;
      roll.alpha_trace.row(t).maxCoeff(&argmax);
      votes[argmax][traj.mode]++;
      assignments.emplace_back(argmax, traj.mode);
    }
  }
  std::map<int, int> mapping;
  for (const auto& [comp, per_mode] : votes) {
    int best_mode = -1, best = -1;
    for (const auto& [mode, count] : per_mode)
      if (count > best) {
        best = count;
        best_mode = mode;
      }
    mapping[comp] = best_mode;
  }
  long agree = 0;
  for (const auto& [comp, mode] : assignments)
    if (mapping[comp] == mode) ++agree;
  const double agreement = static_cast<double>(agree) / assignments.size();

  char detail[192];
  std::snprintf(detail, sizeof(detail),
                "model MSE %.3f vs baseline %.3f (ratio %.4f), mode agreement %.1f%%, %.0f s",
                model_mse, base_mse, model_mse / base_mse, 100.0 * agreement, train_seconds);
  report(6, "synthetic end-to-end", model_mse < 0.2 * base_mse && agreement >= 0.8 &&
                                         train_seconds < 600.0 && !with_sep.result.diverged,
         detail);

  const double dist_with = mean_component_distance(model, dataset);
  const double dist_without =
      mean_component_distance(without_sep.result.model(), without_sep.dataset);
  char detail7[128];
  std::snprintf(detail7, sizeof(detail7),
                "mean pairwise distance %.4f with separation vs %.4f without (ratio %.2fx)",
                dist_with, dist_without, dist_with / dist_without);
  report(7, "mode-collapse regression", dist_with >= 2.0 * dist_without, detail7);
}

// ---------------------------------------------------------------- criterion 8
void criterion_reference_replication() {
  const char* path = std::getenv("MOVEINT_HHI_DATASET");
  if (path == nullptr || std::string(path).empty()) {
    report_skip(8, "reference replication",
                "set MOVEINT_HHI_DATASET to a prepared motion-capture dataset to enable; "
                "criteria 1-7 constitute acceptance without it");
    return;
  }

  // Reference per-action values (cm) and the 2x band for the HHI scenario.
  const std::map<std::string, double> reference = {{"waving", 0.448},
                                                   {"handshake", 0.196},
                                                   {"rocket", 0.123},
                                                   {"parachute", 0.314}};

  const data::DatasetSplit dataset = data::load_dataset(path);
  const data::WindowedPair win =
      data::build_windows(dataset.train.front(), dataset.feature_spec());
  ModelConfig mc;
  mc.human_dim = static_cast<int>(win.human.cols());
  mc.robot_dim = static_cast<int>(win.robot.cols());
  mc.latent_dim = 5;
  mc.n_components = 3;
  mc.hidden1 = 40;
  mc.hidden2 = 20;
  mc.recurrent_dim = 20;

  train::TrainConfig tc;
  tc.beta = 0.005;
  tc.epochs = 400;
  tc.seed = 0;
  const train::TrainResult multi = train::train(dataset, mc, tc);

  ModelConfig uni = mc;
  uni.n_components = 1;  // unimodal-prior configuration
  const train::TrainResult single = train::train(dataset, uni, tc);

  const data::Units units = dataset.train.front().units;
  const auto rows = eval::mse_report(multi.model(), dataset, units);
  const auto uni_rows = eval::mse_report(single.model(), dataset, units);

  bool pass = true;
  std::string detail;
  for (const auto& r : rows) {
    double uni_mse = -1.0;
    for (const auto& u : uni_rows)
      if (u.action == r.action) uni_mse = u.mean;
    double ref = -1.0;
    for (const auto& [key, value] : reference)
      if (r.action.find(key) != std::string::npos) ref = value;
    detail += r.action + " " + std::to_string(r.mean) + "; ";
    if (ref > 0.0 && r.mean > 2.0 * ref) pass = false;
    if (uni_mse >= 0.0 && r.mean >= uni_mse) pass = false;  // multimodal < unimodal ordering
  }
  report(8, "reference replication", pass, detail);
}

// ---------------------------------------------------------------- criterion 9
void criterion_determinism() {
  data::SynthConfig scfg;
  scfg.train_count = 4;
  scfg.test_count = 2;
  scfg.length = 12;
  const data::DatasetSplit a = data::synth_interaction_dataset(scfg, 0);
  const data::DatasetSplit b = data::synth_interaction_dataset(scfg, 0);
  bool synth_ok = a.manifest.dump() == b.manifest.dump();
  for (std::size_t i = 0; i < a.train.size() && synth_ok; ++i)
    synth_ok = (a.train[i].human_frames - b.train[i].human_frames).cwiseAbs().maxCoeff() == 0.0 &&
               (a.train[i].robot_frames - b.train[i].robot_frames).cwiseAbs().maxCoeff() == 0.0;

  const data::WindowedPair win = data::build_windows(a.train.front(), a.feature_spec());
  ModelConfig mc;
  mc.human_dim = static_cast<int>(win.human.cols());
  mc.robot_dim = static_cast<int>(win.robot.cols());
  mc.latent_dim = 3;
  mc.n_components = 2;
  mc.hidden1 = 12;
  mc.hidden2 = 6;
  mc.recurrent_dim = 6;
  train::TrainConfig tc;
  tc.epochs = 10;
  tc.seed = 5;
  const VectorXd run1 = train::train(a, mc, tc).params.flatten();
  const VectorXd run2 = train::train(b, mc, tc).params.flatten();
  bool train_ok = run1.size() == run2.size();
  for (Eigen::Index i = 0; i < run1.size() && train_ok; ++i) train_ok = run1(i) == run2(i);

  report(9, "determinism", synth_ok && train_ok,
         synth_ok ? (train_ok ? "synth and train runs bit-identical" : "train runs differ")
                  : "synth runs differ");
}

}  // namespace

int main() {
  criterion_appendix_identity();
  criterion_mc_conditionals();
  criterion_hmm_brute_force();
  criterion_gradient_fidelity();
  criterion_mixture_invariants();

  const auto start = std::chrono::steady_clock::now();
  const TrainedRun with_sep = train_synth(true);
  const double train_seconds = seconds_since(start);
  const TrainedRun without_sep = train_synth(false);
  criteria_synthetic_end_to_end(with_sep, without_sep, train_seconds);

  criterion_reference_replication();
  criterion_determinism();

  std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
