#pragma once

#include <functional>
#include <optional>

#include "moveint/model.hpp"

namespace moveint::losses {

// Closed-form KL(q || p) between diagonal Gaussians.
double kl_diag_gaussians(const DiagonalGaussian& q, const DiagonalGaussian& p);

// Reconstruction log-likelihood under the unit-variance decoder, up to the
// constant -d/2 log(2 pi) which is dropped throughout.
double gaussian_recon_loglik(const VectorXd& x, const VectorXd& decoded);

using DecodeFn = std::function<VectorXd(const VectorXd&)>;

// Monte-Carlo ELBO: reparameterized samples from q are decoded and scored,
// minus beta times the analytic KL to the prior.
double elbo(const VectorXd& x_r, const DiagonalGaussian& q, const DiagonalGaussian& prior,
            double beta, int n_samples, const DecodeFn& decode, Rng& rng);

// Negative expected decoder log-likelihood under latents drawn from the
// combined prior.
double behavior_cloning_loss(const VectorXd& x_r, const DiagonalGaussian& prior, int n_samples,
                             const DecodeFn& decode, Rng& rng);

struct SepTerms {
  double means = 0.0;
  double temporal = 0.0;
  double entropy = 0.0;
};

// Mode-separation terms over the mixture's latent means and coefficients.
// prev == nullptr marks the first timestep (temporal term is 0 there);
// entropy uses the 0 * ln 0 = 0 convention.
SepTerms separation_loss(const MixtureDensity& m, const MixtureDensity* prev);

struct LossBreakdown {
  double bc = 0.0;
  double recon = 0.0;
  double kl = 0.0;
  double sep_means = 0.0;
  double sep_temporal = 0.0;
  double sep_entropy = 0.0;
  double total = 0.0;
};

struct LossOptions {
  double beta = 0.005;
  int n_samples = 1;
  std::uint64_t noise_seed = 0;
  bool separation_enabled = true;  // when off, the sep terms are reported but excluded from total
};

// Whole-trajectory objective: per timestep, the behavior-cloning term minus
// the informative-prior ELBO plus beta times the separation terms, summed
// over time. Reconstructions are drawn from both the posterior and the
// combined prior. When grads is non-null the analytic parameter gradients
// are written into it (ordered like model.params()).
LossBreakdown total_loss(const MoVEIntModel& model, const MatrixXd& human_windows,
                         const MatrixXd& robot_windows, const LossOptions& options,
                         std::vector<MatrixXd>* grads = nullptr);

}  // namespace moveint::losses
