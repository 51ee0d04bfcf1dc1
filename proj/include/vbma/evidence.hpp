#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vbma/model.hpp"
#include "vbma/models.hpp"
#include "vbma/rng.hpp"

namespace vbma {

enum class EvidenceMethod { ClosedFormZellner, MonteCarlo };

const char* evidence_method_name(EvidenceMethod m);

struct EvidenceEstimate {
  double log_evidence = 0.0;
  EvidenceMethod method = EvidenceMethod::ClosedFormZellner;
  std::int64_t mc_samples = 0;
  double standard_error = 0.0;
};

/// Exact log p(y | M) under the g-prior, up to the constant shared by all
/// subset models through the improper p(phi) and p(beta0). With R^2 from
/// least squares and S = TSS (1 + g (1 - R^2)) / (1 + g):
///   log p = -(n-1)/2 log(2 pi) - 1/2 log n - p/2 log(1 + g)
///           + lgamma((n-1)/2) - (n-1)/2 log(S / 2)
/// Predictors must be centered.
EvidenceEstimate zellner_log_evidence(const LinearRegressionModel& model);

/// log of the mean likelihood over N prior draws, accumulated in log space.
/// The standard error is the delta-method error of the log. Draws are split
/// into fixed blocks with their own substreams, so `threads` does not change
/// the result.
EvidenceEstimate mc_log_evidence(const Model& model, std::int64_t samples, std::uint64_t seed,
                                 int threads = 1);

/// Posterior model probabilities from log-evidences and prior weights.
std::vector<double> evidence_to_posterior(std::span<const EvidenceEstimate> estimates,
                                          std::span<const double> prior_weights);

/// Exact Normal-Gamma posterior of a g-prior model, for drawing parameters:
///   phi | y ~ Gamma((n-1)/2, rate S/2)
///   beta0 | phi, y ~ N(ybar, 1/(n phi))
///   beta_S | phi, y ~ N(g/(1+g) b_ols, g/(1+g) (X'X)^{-1} / phi)
class ZellnerPosterior {
 public:
  explicit ZellnerPosterior(const LinearRegressionModel& model);

  /// One draw in the model's parameter layout.
  std::vector<double> sample(Rng& rng) const;

  double phi_shape() const noexcept { return shape_; }
  double phi_rate() const noexcept { return rate_; }
  const Eigen::VectorXd& slope_mean() const noexcept { return slope_mean_; }
  double intercept_mean() const noexcept { return ybar_; }

 private:
  double shape_ = 0.0, rate_ = 0.0, ybar_ = 0.0, shrink_ = 0.0;
  Eigen::Index n_ = 0;
  Eigen::VectorXd slope_mean_;
  Eigen::MatrixXd gram_inv_chol_;  // lower factor L with L L' = (X'X)^{-1}
};

}  // namespace vbma
