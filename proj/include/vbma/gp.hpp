#pragma once

// Gaussian-process regression with a constant mean and a squared-exponential
// kernel on two-dimensional inputs:
//   k(x, x') = eta^2 exp(-(x1 - x1')^2 / (2 nu1^2) - (x2 - x2')^2 / (2 nu2^2))
//   y = f(x) + sigma * eps,  f ~ GP(beta + offset, k)

#include <array>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace vbma::gp {

struct Hyper {
  double beta = 0.0;
  double eta = 1.0;
  double nu1 = 1.0;
  double nu2 = 1.0;
  double sigma = 0.1;
};

/// exp(-d1^2 / (2 nu1^2) - d2^2 / (2 nu2^2)) between rows of `a` and `b`.
Eigen::MatrixXd correlation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double nu1,
                            double nu2);

/// Cholesky factor of K + sigma^2 I + jitter I. The jitter starts at
/// `relative_jitter * eta^2` and grows tenfold up to three times before giving
/// up with ConditioningError. A zero relative jitter allows one attempt only.
struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::MatrixXd correlation;  ///< Unscaled SE correlation among training inputs.
  double jitter = 0.0;          ///< Absolute jitter added to the diagonal.
};

Factorization factorize(const Eigen::MatrixXd& x, const Hyper& h, double relative_jitter);

/// log N(y; (beta + offset) 1, K + sigma^2 I). When `gradient` is non-null it
/// receives d/d(beta, eta, nu1, nu2, sigma).
double log_marginal(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyper& h,
                    double relative_jitter, double mean_offset,
                    std::array<double, 5>* gradient = nullptr);

struct Conditional {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;  ///< Latent f variance, clamped at zero.
};

/// Posterior of f at `x_new` given training data and hyperparameters.
Conditional condition(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyper& h,
                      double relative_jitter, double mean_offset, const Eigen::MatrixXd& x_new);

}  // namespace vbma::gp
