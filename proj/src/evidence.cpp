#include "vbma/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Cholesky>

#include "vbma/errors.hpp"
#include "vbma/math.hpp"
#include "vbma/vbma.hpp"

namespace vbma {

const char* evidence_method_name(EvidenceMethod m) {
  return m == EvidenceMethod::MonteCarlo ? "monte_carlo" : "zellner";
}

namespace {

struct LeastSquares {
  double tss = 0.0;
  double rss = 0.0;
  double ybar = 0.0;
  Eigen::VectorXd coef;
  Eigen::LLT<Eigen::MatrixXd> gram;
};

LeastSquares least_squares(const LinearRegressionModel& model) {
  const Eigen::MatrixXd& x = model.design();
  const Eigen::VectorXd& y = model.response();
  const Eigen::Index n = y.size();
  const Eigen::Index p = x.cols();
  if (n <= p + 1) {
    throw ConfigError("model '" + model.name() + "': closed-form evidence needs n > p + 1 (n = " +
                      std::to_string(n) + ", p = " + std::to_string(p) + ")");
  }
  LeastSquares ls;
  ls.ybar = y.mean();
  const Eigen::VectorXd yc = y.array() - ls.ybar;
  ls.tss = yc.squaredNorm();
  if (p == 0) {
    ls.rss = ls.tss;
    return ls;
  }
  const double scale = x.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < p; ++j) {
    if (std::abs(x.col(j).mean()) > 1e-8 * std::max(scale, 1.0)) {
      throw ConfigError("model '" + model.name() + "': closed-form evidence needs centered predictors");
    }
  }
  ls.gram.compute(x.transpose() * x);
  if (ls.gram.info() != Eigen::Success) {
    throw DecompositionError("model '" + model.name() + "': X'X is singular");
  }
  ls.coef = ls.gram.solve(x.transpose() * yc);
  ls.rss = (yc - x * ls.coef).squaredNorm();
  return ls;
}

double zellner_s(const LeastSquares& ls, double g) {
  const double r2 = ls.tss > 0.0 ? 1.0 - ls.rss / ls.tss : 0.0;
  return ls.tss * (1.0 + g * (1.0 - r2)) / (1.0 + g);
}

}  // namespace

EvidenceEstimate zellner_log_evidence(const LinearRegressionModel& model) {
  const LeastSquares ls = least_squares(model);
  const auto n = static_cast<double>(model.response().size());
  const auto p = static_cast<double>(model.design().cols());
  const double g = model.g();
  const double s = zellner_s(ls, g);
  if (!(s > 0.0)) throw NumericalError("model '" + model.name() + "': zero residual spread");
  const double a = 0.5 * (n - 1.0);
  EvidenceEstimate e;
  e.method = EvidenceMethod::ClosedFormZellner;
  e.log_evidence = -a * kLogTwoPi - 0.5 * std::log(n) - 0.5 * p * std::log1p(g) + std::lgamma(a) -
                   a * std::log(0.5 * s);
  return e;
}

EvidenceEstimate mc_log_evidence(const Model& model, std::int64_t samples, std::uint64_t seed,
                                 int threads) {
  if (!model.has_proper_prior()) {
    throw ConfigError("model '" + model.name() +
                      "': Monte Carlo evidence needs a proper prior (sample from p(theta | M))");
  }
  if (samples < 1) throw ConfigError("Monte Carlo evidence needs at least one sample");
  constexpr std::int64_t kBlock = 4096;
  const std::int64_t blocks = (samples + kBlock - 1) / kBlock;
  std::vector<double> ll(static_cast<std::size_t>(samples));
  parallel_for(static_cast<std::size_t>(blocks), threads, [&](std::size_t b) {
    Rng rng = substream(seed, 0xe71d, b);
    const std::int64_t begin = static_cast<std::int64_t>(b) * kBlock;
    const std::int64_t end = std::min(samples, begin + kBlock);
    for (std::int64_t i = begin; i < end; ++i) {
      const std::vector<double> theta = model.sample_prior(rng);
      ll[static_cast<std::size_t>(i)] = model.log_likelihood(theta);
    }
  });
  const double m = *std::max_element(ll.begin(), ll.end());
  EvidenceEstimate e;
  e.method = EvidenceMethod::MonteCarlo;
  e.mc_samples = samples;
  if (m == -INFINITY) {
    e.log_evidence = -INFINITY;
    return e;
  }
  if (!std::isfinite(m)) throw NonFiniteError("mc_log_evidence", "log likelihood is not finite");
  double sum = 0.0, sum_sq = 0.0;
  for (double v : ll) {
    const double w = std::exp(v - m);
    sum += w;
    sum_sq += w * w;
  }
  const auto n = static_cast<double>(samples);
  const double mean = sum / n;
  e.log_evidence = m + std::log(mean);
  if (samples > 1) {
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    e.standard_error = std::sqrt(var / n) / mean;
  }
  return e;
}

std::vector<double> evidence_to_posterior(std::span<const EvidenceEstimate> estimates,
                                          std::span<const double> prior_weights) {
  if (estimates.size() != prior_weights.size()) {
    throw DimensionError("evidence_to_posterior: estimates and prior weights differ in length");
  }
  if (estimates.empty()) throw DimensionError("evidence_to_posterior: no models");
  const bool zellner = estimates.front().method == EvidenceMethod::ClosedFormZellner;
  for (const auto& e : estimates) {
    if ((e.method == EvidenceMethod::ClosedFormZellner) != zellner) {
      throw ConfigError(
          "evidence_to_posterior: cannot mix closed-form Zellner evidences (defined up to a shared "
          "constant) with proper-prior estimates");
    }
  }
  std::vector<double> log_ev(estimates.size()), log_prior(estimates.size());
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (!(prior_weights[i] > 0.0)) throw DomainError("prior model weights must be positive");
    log_ev[i] = estimates[i].log_evidence;
    log_prior[i] = std::log(prior_weights[i]);
  }
  return update_weights(log_ev, log_prior);
}

ZellnerPosterior::ZellnerPosterior(const LinearRegressionModel& model) {
  const LeastSquares ls = least_squares(model);
  const double g = model.g();
  n_ = model.response().size();
  shape_ = 0.5 * static_cast<double>(n_ - 1);
  rate_ = 0.5 * zellner_s(ls, g);
  ybar_ = ls.ybar;
  shrink_ = g / (1.0 + g);
  const Eigen::Index p = model.design().cols();
  if (p > 0) {
    slope_mean_ = shrink_ * ls.coef;
    const Eigen::MatrixXd inv = ls.gram.solve(Eigen::MatrixXd::Identity(p, p));
    gram_inv_chol_ = Eigen::LLT<Eigen::MatrixXd>(inv).matrixL();
  } else {
    slope_mean_.resize(0);
  }
}

std::vector<double> ZellnerPosterior::sample(Rng& rng) const {
  std::gamma_distribution<double> gamma(shape_, 1.0 / rate_);
  const double phi = gamma(rng);
  const Eigen::Index p = slope_mean_.size();
  std::vector<double> theta(static_cast<std::size_t>(p + 2));
  theta[0] = ybar_ + standard_normal(rng) / std::sqrt(static_cast<double>(n_) * phi);
  if (p > 0) {
    Eigen::VectorXd z(p);
    for (Eigen::Index j = 0; j < p; ++j) z(j) = standard_normal(rng);
    const Eigen::VectorXd b = slope_mean_ + std::sqrt(shrink_ / phi) * (gram_inv_chol_ * z);
    for (Eigen::Index j = 0; j < p; ++j) theta[static_cast<std::size_t>(j + 1)] = b(j);
  }
  theta.back() = phi;
  return theta;
}

}  // namespace vbma
