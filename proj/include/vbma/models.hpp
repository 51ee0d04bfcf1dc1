#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "vbma/gp.hpp"
#include "vbma/model.hpp"

namespace vbma {

/// Gaussian linear regression y = beta0 + X_S beta_S + eps, eps ~ N(0, 1/phi),
/// with Zellner's g-prior:
///   p(phi) ∝ 1/phi,  p(beta0) ∝ 1,  beta_S | phi ~ N(0, g (X_S'X_S)^{-1} / phi).
/// The improper parts contribute -log(phi) and 0 to the log prior, identical
/// for every subset, so they cancel in model comparisons within a subset
/// ensemble. Predictors are expected centered (intercept kept separate).
///
/// Parameters: beta0 (normal), beta[<name>] per predictor (normal), phi (log-normal).
class LinearRegressionModel : public Model {
 public:
  /// `x` holds every candidate predictor; `subset` selects columns. g <= 0 means g = n.
  LinearRegressionModel(std::string name, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        std::vector<int> subset, std::vector<std::string> predictor_names,
                        double g = 0.0);

  double log_likelihood(std::span<const double> theta) const override;
  ad::Var log_likelihood(std::span<const ad::Var> theta) const override;
  double log_prior(std::span<const double> theta) const override;
  ad::Var log_prior(std::span<const ad::Var> theta) const override;
  bool has_proper_prior() const override { return false; }
  Predictive predict(std::span<const double> theta, const Eigen::MatrixXd& points) const override;
  std::vector<std::string> predictors() const override;

  const std::vector<int>& subset() const noexcept { return subset_; }
  double g() const noexcept { return g_; }
  Eigen::Index observations() const noexcept { return n_; }
  /// Design of the active predictors (n x p) and response, as given.
  const Eigen::MatrixXd& design() const noexcept { return x_; }
  const Eigen::VectorXd& response() const noexcept { return y_; }

 private:
  template <class T>
  T log_likelihood_impl(std::span<const T> theta) const;
  template <class T>
  T log_prior_impl(std::span<const T> theta) const;

  std::vector<int> subset_;
  std::vector<std::string> names_;
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  Eigen::Index n_ = 0;
  double g_ = 0.0;
  double y_shift_ = 0.0;     // response mean, removed for numerical stability
  Eigen::MatrixXd gram_;     // [1 X]'[1 X]
  Eigen::VectorXd cross_;    // [1 X]'(y - y_shift)
  double yy_ = 0.0;          // (y - y_shift)'(y - y_shift)
  double half_log_det_prior_ = 0.0;  // 0.5 log det(X'X / g)
};

/// Bernoulli regression with logit link and independent N(0, sd^2) priors on
/// every coefficient including the intercept.
///
/// Parameters: beta0 and beta[<name>] per predictor, all normal.
class LogisticRegressionModel : public Model {
 public:
  LogisticRegressionModel(std::string name, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          std::vector<int> subset, std::vector<std::string> predictor_names,
                          double prior_sd = 3.0);

  double log_likelihood(std::span<const double> theta) const override;
  ad::Var log_likelihood(std::span<const ad::Var> theta) const override;
  double log_prior(std::span<const double> theta) const override;
  ad::Var log_prior(std::span<const ad::Var> theta) const override;
  bool has_proper_prior() const override { return true; }
  std::vector<double> sample_prior(Rng& rng) const override;
  Predictive predict(std::span<const double> theta, const Eigen::MatrixXd& points) const override;
  std::vector<std::string> predictors() const override;

  const std::vector<int>& subset() const noexcept { return subset_; }
  double prior_sd() const noexcept { return prior_sd_; }

 private:
  template <class T>
  T log_prior_impl(std::span<const T> theta) const;

  std::vector<int> subset_;
  std::vector<std::string> names_;
  std::vector<double> rows_;  // row-major [1 x_S], n x (p + 1)
  std::vector<double> xty_;   // [1 X_S]'y
  Eigen::Index n_ = 0;
  double prior_sd_ = 3.0;
};

/// Priors of the GP model: beta ~ N(0, beta_sd^2); each positive
/// hyperparameter h has log h ~ N(m, s^2).
struct GpPrior {
  double beta_sd = 0.5;
  double log_eta_mean = 0.0, log_eta_sd = 1.0;
  double log_nu_mean = 1.0, log_nu_sd = 1.0;
  double log_sigma_mean = -1.0, log_sigma_sd = 1.0;
};

/// GP regression on 2-D inputs with the latent f analytically marginalized.
/// `mean_offset` is a fixed, known shift of the constant mean; candidate mean
/// structures differ in it.
///
/// Parameters: beta (normal), eta, nu1, nu2, sigma (log-normal).
class GaussianProcessModel : public Model {
 public:
  GaussianProcessModel(std::string name, Eigen::MatrixXd x, Eigen::VectorXd y,
                       double mean_offset = 0.0, GpPrior prior = {},
                       double relative_jitter = 1e-6);

  double log_likelihood(std::span<const double> theta) const override;
  ad::Var log_likelihood(std::span<const ad::Var> theta) const override;
  double log_prior(std::span<const double> theta) const override;
  ad::Var log_prior(std::span<const ad::Var> theta) const override;
  bool has_proper_prior() const override { return true; }
  std::vector<double> sample_prior(Rng& rng) const override;
  /// `points` rows are 2-D inputs.
  Predictive predict(std::span<const double> theta, const Eigen::MatrixXd& points) const override;

  double mean_offset() const noexcept { return mean_offset_; }
  const Eigen::MatrixXd& inputs() const noexcept { return x_; }
  const Eigen::VectorXd& response() const noexcept { return y_; }

  static gp::Hyper hyper(std::span<const double> theta);

 private:
  template <class T>
  T log_prior_impl(std::span<const T> theta) const;

  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  double mean_offset_ = 0.0;
  GpPrior prior_;
  double relative_jitter_ = 1e-6;
};

/// y_i ~ N(mu, noise_sd^2) with known noise and mu ~ N(prior_mean, prior_sd^2).
/// Conjugate, so exact posteriors and evidences are available for checking.
///
/// Parameters: mu (normal).
class NormalMeanModel : public Model {
 public:
  NormalMeanModel(std::string name, std::vector<double> y, double noise_sd, double prior_mean,
                  double prior_sd);

  double log_likelihood(std::span<const double> theta) const override;
  ad::Var log_likelihood(std::span<const ad::Var> theta) const override;
  double log_prior(std::span<const double> theta) const override;
  ad::Var log_prior(std::span<const ad::Var> theta) const override;
  bool has_proper_prior() const override { return true; }
  std::vector<double> sample_prior(Rng& rng) const override;
  Predictive predict(std::span<const double> theta, const Eigen::MatrixXd& points) const override;

  const std::vector<double>& data() const noexcept { return y_; }
  double noise_sd() const noexcept { return noise_sd_; }
  double prior_mean() const noexcept { return prior_mean_; }
  double prior_sd() const noexcept { return prior_sd_; }

 private:
  template <class T>
  T log_likelihood_impl(std::span<const T> theta) const;

  std::vector<double> y_;
  double sum_ = 0.0, sum_sq_ = 0.0;
  double noise_sd_, prior_mean_, prior_sd_;
};

}  // namespace vbma
