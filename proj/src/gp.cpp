#include "vbma/gp.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "vbma/errors.hpp"
#include "vbma/math.hpp"
#include "vbma/text.hpp"

namespace vbma::gp {

Eigen::MatrixXd correlation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double nu1,
                            double nu2) {
  if (a.cols() != 2 || b.cols() != 2) throw DimensionError("gp: inputs must have two columns");
  const double s1 = 0.5 / (nu1 * nu1);
  const double s2 = 0.5 / (nu2 * nu2);
  Eigen::MatrixXd c(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double d1 = a(i, 0) - b(j, 0);
      const double d2 = a(i, 1) - b(j, 1);
      c(i, j) = std::exp(-s1 * d1 * d1 - s2 * d2 * d2);
    }
  }
  return c;
}

Factorization factorize(const Eigen::MatrixXd& x, const Hyper& h, double relative_jitter) {
  if (!(h.eta > 0.0 && h.nu1 > 0.0 && h.nu2 > 0.0 && h.sigma >= 0.0)) {
    throw DomainError("gp: eta, nu1, nu2 must be positive and sigma non-negative");
  }
  Factorization f;
  f.correlation = correlation(x, x, h.nu1, h.nu2);
  const Eigen::Index n = x.rows();
  const double base = relative_jitter * h.eta * h.eta;
  const int attempts = relative_jitter > 0.0 ? 4 : 1;
  Eigen::MatrixXd a;
  for (int k = 0; k < attempts; ++k) {
    f.jitter = base * std::pow(10.0, k);
    a = h.eta * h.eta * f.correlation;
    a.diagonal().array() += h.sigma * h.sigma + f.jitter;
    f.llt.compute(a);
    if (f.llt.info() == Eigen::Success) {
      // LLT only fails on a non-positive pivot; a tiny positive pivot still
      // yields a useless factor, so demand a sane diagonal too.
      const auto diag = f.llt.matrixLLT().diagonal();
      if (diag.minCoeff() > 1e-7 * std::sqrt(a.diagonal().maxCoeff())) return f;
    }
  }
  const double min_eig =
      n > 0 ? Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a, Eigen::EigenvaluesOnly)
                  .eigenvalues()
                  .minCoeff()
            : 0.0;
  throw ConditioningError("gp: covariance not positive definite after jitter " +
                              text::format_double(f.jitter) + " (min eigenvalue estimate " +
                              text::format_double(min_eig) + ")",
                          min_eig);
}

double log_marginal(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyper& h,
                    double relative_jitter, double mean_offset, std::array<double, 5>* gradient) {
  if (x.rows() != y.size()) throw DimensionError("gp: inputs and responses differ in length");
  const Eigen::Index n = y.size();
  const Factorization f = factorize(x, h, relative_jitter);
  const Eigen::VectorXd r = y.array() - (h.beta + mean_offset);
  const Eigen::VectorXd alpha = f.llt.solve(r);
  const double log_det = 2.0 * f.llt.matrixLLT().diagonal().array().log().sum();
  const double value = -0.5 * r.dot(alpha) - 0.5 * log_det - 0.5 * static_cast<double>(n) * kLogTwoPi;
  if (!gradient) return value;

  // dL/dp = 0.5 * sum((alpha alpha' - A^-1) .* dA/dp)
  Eigen::MatrixXd w = f.llt.solve(Eigen::MatrixXd::Identity(n, n));
  w = alpha * alpha.transpose() - w;
  const double eta2 = h.eta * h.eta;
  const double jitter_rel = f.jitter / eta2;
  double d_eta = 0.0, d_nu1 = 0.0, d_nu2 = 0.0;
  const double inv_nu1_3 = 1.0 / (h.nu1 * h.nu1 * h.nu1);
  const double inv_nu2_3 = 1.0 / (h.nu2 * h.nu2 * h.nu2);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double c = f.correlation(i, j);
      const double wc = w(i, j) * c;
      const double d1 = x(i, 0) - x(j, 0);
      const double d2 = x(i, 1) - x(j, 1);
      d_eta += wc;
      d_nu1 += wc * d1 * d1;
      d_nu2 += wc * d2 * d2;
    }
  }
  // The jitter scales with eta^2, so it contributes to dA/deta.
  d_eta = 0.5 * 2.0 * h.eta * (d_eta + jitter_rel * w.trace());
  (*gradient)[0] = alpha.sum();
  (*gradient)[1] = d_eta;
  (*gradient)[2] = 0.5 * eta2 * inv_nu1_3 * d_nu1;
  (*gradient)[3] = 0.5 * eta2 * inv_nu2_3 * d_nu2;
  (*gradient)[4] = 0.5 * 2.0 * h.sigma * w.trace();
  return value;
}

Conditional condition(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyper& h,
                      double relative_jitter, double mean_offset, const Eigen::MatrixXd& x_new) {
  const Factorization f = factorize(x, h, relative_jitter);
  const double mean = h.beta + mean_offset;
  const Eigen::VectorXd alpha = f.llt.solve((y.array() - mean).matrix());
  const Eigen::MatrixXd k_star = h.eta * h.eta * correlation(x, x_new, h.nu1, h.nu2);
  Conditional out;
  out.mean = (k_star.transpose() * alpha).array() + mean;
  const Eigen::MatrixXd v = f.llt.matrixL().solve(k_star);
  out.variance = (h.eta * h.eta - v.colwise().squaredNorm().array()).max(0.0).matrix().transpose();
  return out;
}

}  // namespace vbma::gp
