#include "vbma/models.hpp"

#include <array>
#include <cmath>

#include <Eigen/Cholesky>

#include "vbma/errors.hpp"
#include "vbma/math.hpp"

namespace vbma {

namespace {

std::string subset_label(const std::vector<int>& subset, const std::vector<std::string>& names) {
  std::string s = "{";
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (i) s += ",";
    s += names.at(static_cast<std::size_t>(subset[i]));
  }
  return s + "}";
}

ParamLayout regression_layout(const std::vector<int>& subset,
                              const std::vector<std::string>& names, bool with_precision) {
  ParamLayout layout{{"beta0", Family::Normal}};
  for (int j : subset) layout.push_back({"beta[" + names.at(static_cast<std::size_t>(j)) + "]", Family::Normal});
  if (with_precision) layout.push_back({"phi", Family::LogNormal});
  return layout;
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x, const std::vector<int>& subset) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(subset.size()));
  for (std::size_t j = 0; j < subset.size(); ++j) {
    if (subset[j] < 0 || subset[j] >= x.cols()) {
      throw DimensionError("predictor index " + std::to_string(subset[j]) + " out of range");
    }
    out.col(static_cast<Eigen::Index>(j)) = x.col(subset[j]);
  }
  return out;
}

std::vector<std::string> subset_names(const std::vector<int>& subset,
                                      const std::vector<std::string>& names) {
  std::vector<std::string> out;
  for (int j : subset) out.push_back(names.at(static_cast<std::size_t>(j)));
  return out;
}

double lognormal_log_density(double x, double m, double s) {
  const double lx = std::log(x);
  return normal_log_density(lx, m, s * s) - lx;
}

ad::Var lognormal_log_density(const ad::Var& x, double m, double s) {
  const ad::Var lx = log(x);
  const ad::Var d = lx - m;
  return -0.5 * (kLogTwoPi + 2.0 * std::log(s)) - d * d / (2.0 * s * s) - lx;
}

}  // namespace

// ---------------------------------------------------------------------------
// Linear regression with Zellner's g-prior

LinearRegressionModel::LinearRegressionModel(std::string name, const Eigen::MatrixXd& x,
                                             const Eigen::VectorXd& y, std::vector<int> subset,
                                             std::vector<std::string> predictor_names, double g)
    : Model(std::move(name), regression_layout(subset, predictor_names, true)),
      subset_(std::move(subset)),
      names_(std::move(predictor_names)) {
  if (x.rows() != y.size()) throw DimensionError("linear model: design and response differ in length");
  x_ = select_columns(x, subset_);
  y_ = y;
  n_ = y.size();
  g_ = g > 0.0 ? g : static_cast<double>(n_);
  const auto p = static_cast<Eigen::Index>(subset_.size());
  y_shift_ = n_ > 0 ? y.mean() : 0.0;

  Eigen::MatrixXd aug(n_, p + 1);
  aug.col(0).setOnes();
  aug.rightCols(p) = x_;
  const Eigen::VectorXd yc = y.array() - y_shift_;
  gram_ = aug.transpose() * aug;
  cross_ = aug.transpose() * yc;
  yy_ = yc.squaredNorm();

  if (p > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(gram_.bottomRightCorner(p, p) / g_);
    if (llt.info() != Eigen::Success || llt.matrixLLT().diagonal().minCoeff() <= 0.0) {
      throw DecompositionError("X'X is singular for predictor subset " +
                               subset_label(subset_, names_));
    }
    half_log_det_prior_ = llt.matrixLLT().diagonal().array().log().sum();
  }
}

template <class T>
T LinearRegressionModel::log_likelihood_impl(std::span<const T> theta) const {
  using std::log;
  check_theta(theta.size());
  const std::size_t p = subset_.size();
  const T& phi = theta[p + 1];
  std::vector<T> b(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(p + 1));
  b[0] = b[0] - y_shift_;
  // residual sum of squares = yy - 2 b'h + b'Gb
  T rss = yy_;
  for (std::size_t i = 0; i < p + 1; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const std::span<const double> g_col(gram_.col(col).data(), p + 1);
    rss += b[i] * dot(std::span<const T>(b), g_col, -2.0 * cross_[col]);
  }
  const double n = static_cast<double>(n_);
  return 0.5 * n * log(phi) - 0.5 * n * kLogTwoPi - 0.5 * phi * rss;
}

template <class T>
T LinearRegressionModel::log_prior_impl(std::span<const T> theta) const {
  using std::log;
  check_theta(theta.size());
  const std::size_t p = subset_.size();
  const T& phi = theta[p + 1];
  const T log_phi = log(phi);
  T out = -log_phi;  // p(phi) ∝ 1/phi; p(beta0) ∝ 1 adds nothing
  if (p == 0) return out;
  const std::span<const T> slopes = theta.subspan(1, p);
  T quad = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    const auto col = static_cast<Eigen::Index>(i + 1);
    const std::span<const double> g_col(gram_.col(col).data() + 1, p);
    quad += slopes[i] * dot(slopes, g_col, 0.0);
  }
  const double dp = static_cast<double>(p);
  return out + 0.5 * dp * log_phi - 0.5 * dp * kLogTwoPi + half_log_det_prior_ -
         phi * quad / (2.0 * g_);
}

double LinearRegressionModel::log_likelihood(std::span<const double> theta) const {
  return log_likelihood_impl(theta);
}
ad::Var LinearRegressionModel::log_likelihood(std::span<const ad::Var> theta) const {
  return log_likelihood_impl(theta);
}
double LinearRegressionModel::log_prior(std::span<const double> theta) const {
  return log_prior_impl(theta);
}
ad::Var LinearRegressionModel::log_prior(std::span<const ad::Var> theta) const {
  return log_prior_impl(theta);
}

Predictive LinearRegressionModel::predict(std::span<const double> theta,
                                          const Eigen::MatrixXd& points) const {
  check_theta(theta.size());
  const std::size_t p = subset_.size();
  Predictive out;
  out.kind = Predictive::Kind::Gaussian;
  out.mean = Eigen::VectorXd::Constant(points.rows(), theta[0]);
  for (std::size_t j = 0; j < p; ++j) out.mean += theta[j + 1] * points.col(subset_[j]);
  out.latent_variance = Eigen::VectorXd::Zero(points.rows());
  out.noise_variance = Eigen::VectorXd::Constant(points.rows(), 1.0 / theta[p + 1]);
  return out;
}

std::vector<std::string> LinearRegressionModel::predictors() const {
  return subset_names(subset_, names_);
}

// ---------------------------------------------------------------------------
// Logistic regression

LogisticRegressionModel::LogisticRegressionModel(std::string name, const Eigen::MatrixXd& x,
                                                 const Eigen::VectorXd& y, std::vector<int> subset,
                                                 std::vector<std::string> predictor_names,
                                                 double prior_sd)
    : Model(std::move(name), regression_layout(subset, predictor_names, false)),
      subset_(std::move(subset)),
      names_(std::move(predictor_names)),
      n_(y.size()),
      prior_sd_(prior_sd) {
  if (x.rows() != y.size()) throw DimensionError("logistic model: design and response differ in length");
  if (!(prior_sd > 0.0)) throw DomainError("logistic model: prior sd must be positive");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw DomainError("logistic model: response row " + std::to_string(i + 1) + " is not 0/1");
    }
  }
  const Eigen::MatrixXd xs = select_columns(x, subset_);
  const std::size_t width = subset_.size() + 1;
  rows_.resize(static_cast<std::size_t>(n_) * width);
  xty_.assign(width, 0.0);
  for (Eigen::Index i = 0; i < n_; ++i) {
    double* row = rows_.data() + static_cast<std::size_t>(i) * width;
    row[0] = 1.0;
    for (Eigen::Index j = 0; j < xs.cols(); ++j) row[j + 1] = xs(i, j);
    for (std::size_t j = 0; j < width; ++j) xty_[j] += y[i] * row[j];
  }
}

double LogisticRegressionModel::log_likelihood(std::span<const double> theta) const {
  check_theta(theta.size());
  const std::size_t width = theta.size();
  double total = dot(theta, xty_);
  for (Eigen::Index i = 0; i < n_; ++i) {
    const std::span<const double> row(rows_.data() + static_cast<std::size_t>(i) * width, width);
    total -= softplus(dot(theta, row));
  }
  return total;
}

ad::Var LogisticRegressionModel::log_likelihood(std::span<const ad::Var> theta) const {
  check_theta(theta.size());
  const std::size_t width = theta.size();
  // sum_i y_i eta_i - log(1 + e^eta_i)
  std::vector<ad::Var> terms;
  terms.reserve(static_cast<std::size_t>(n_));
  for (Eigen::Index i = 0; i < n_; ++i) {
    const std::span<const double> row(rows_.data() + static_cast<std::size_t>(i) * width, width);
    terms.push_back(softplus(ad::dot(theta, row)));
  }
  return ad::dot(theta, xty_) - ad::sum(terms);
}

template <class T>
T LogisticRegressionModel::log_prior_impl(std::span<const T> theta) const {
  check_theta(theta.size());
  const double var = prior_sd_ * prior_sd_;
  T ss = 0.0;
  for (const T& b : theta) ss += b * b;
  return -0.5 * static_cast<double>(theta.size()) * (kLogTwoPi + std::log(var)) - ss / (2.0 * var);
}

double LogisticRegressionModel::log_prior(std::span<const double> theta) const {
  return log_prior_impl(theta);
}
ad::Var LogisticRegressionModel::log_prior(std::span<const ad::Var> theta) const {
  return log_prior_impl(theta);
}

std::vector<double> LogisticRegressionModel::sample_prior(Rng& rng) const {
  std::vector<double> theta(dimension());
  fill_standard_normal(rng, theta);
  for (double& t : theta) t *= prior_sd_;
  return theta;
}

Predictive LogisticRegressionModel::predict(std::span<const double> theta,
                                            const Eigen::MatrixXd& points) const {
  check_theta(theta.size());
  Predictive out;
  out.kind = Predictive::Kind::Bernoulli;
  out.mean.resize(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double eta = theta[0];
    for (std::size_t j = 0; j < subset_.size(); ++j) eta += theta[j + 1] * points(i, subset_[j]);
    out.mean[i] = sigmoid(eta);
  }
  out.latent_variance = Eigen::VectorXd::Zero(points.rows());
  out.noise_variance = (out.mean.array() * (1.0 - out.mean.array())).matrix();
  return out;
}

std::vector<std::string> LogisticRegressionModel::predictors() const {
  return subset_names(subset_, names_);
}

// ---------------------------------------------------------------------------
// Gaussian process

GaussianProcessModel::GaussianProcessModel(std::string name, Eigen::MatrixXd x, Eigen::VectorXd y,
                                           double mean_offset, GpPrior prior,
                                           double relative_jitter)
    : Model(std::move(name), {{"beta", Family::Normal},
                              {"eta", Family::LogNormal},
                              {"nu1", Family::LogNormal},
                              {"nu2", Family::LogNormal},
                              {"sigma", Family::LogNormal}}),
      x_(std::move(x)),
      y_(std::move(y)),
      mean_offset_(mean_offset),
      prior_(prior),
      relative_jitter_(relative_jitter) {
  if (x_.cols() != 2) throw DimensionError("GP model: inputs must have two columns");
  if (x_.rows() != y_.size()) throw DimensionError("GP model: inputs and responses differ in length");
}

gp::Hyper GaussianProcessModel::hyper(std::span<const double> theta) {
  return {theta[0], theta[1], theta[2], theta[3], theta[4]};
}

double GaussianProcessModel::log_likelihood(std::span<const double> theta) const {
  check_theta(theta.size());
  return gp::log_marginal(x_, y_, hyper(theta), relative_jitter_, mean_offset_);
}

ad::Var GaussianProcessModel::log_likelihood(std::span<const ad::Var> theta) const {
  check_theta(theta.size());
  const std::array<double, 5> values{theta[0].value(), theta[1].value(), theta[2].value(),
                                     theta[3].value(), theta[4].value()};
  std::array<double, 5> partials{};
  const double v = gp::log_marginal(x_, y_, hyper(values), relative_jitter_, mean_offset_, &partials);
  ad::Tape* tape = nullptr;
  for (const auto& t : theta) {
    if (t.tape()) tape = t.tape();
  }
  if (!tape) return ad::Var(v);
  return tape->record(ad::Op::Primitive, v, theta, partials);
}

template <class T>
T GaussianProcessModel::log_prior_impl(std::span<const T> theta) const {
  check_theta(theta.size());
  const T& beta = theta[0];
  T out = -0.5 * (kLogTwoPi + 2.0 * std::log(prior_.beta_sd)) -
          beta * beta / (2.0 * prior_.beta_sd * prior_.beta_sd);
  out += lognormal_log_density(theta[1], prior_.log_eta_mean, prior_.log_eta_sd);
  out += lognormal_log_density(theta[2], prior_.log_nu_mean, prior_.log_nu_sd);
  out += lognormal_log_density(theta[3], prior_.log_nu_mean, prior_.log_nu_sd);
  out += lognormal_log_density(theta[4], prior_.log_sigma_mean, prior_.log_sigma_sd);
  return out;
}

double GaussianProcessModel::log_prior(std::span<const double> theta) const {
  return log_prior_impl(theta);
}
ad::Var GaussianProcessModel::log_prior(std::span<const ad::Var> theta) const {
  return log_prior_impl(theta);
}

std::vector<double> GaussianProcessModel::sample_prior(Rng& rng) const {
  std::array<double, 5> z{};
  fill_standard_normal(rng, z);
  return {prior_.beta_sd * z[0], std::exp(prior_.log_eta_mean + prior_.log_eta_sd * z[1]),
          std::exp(prior_.log_nu_mean + prior_.log_nu_sd * z[2]),
          std::exp(prior_.log_nu_mean + prior_.log_nu_sd * z[3]),
          std::exp(prior_.log_sigma_mean + prior_.log_sigma_sd * z[4])};
}

Predictive GaussianProcessModel::predict(std::span<const double> theta,
                                         const Eigen::MatrixXd& points) const {
  check_theta(theta.size());
  const gp::Hyper h = hyper(theta);
  const gp::Conditional c = gp::condition(x_, y_, h, relative_jitter_, mean_offset_, points);
  Predictive out;
  out.kind = Predictive::Kind::Gaussian;
  out.mean = c.mean;
  out.latent_variance = c.variance;
  out.noise_variance = Eigen::VectorXd::Constant(points.rows(), h.sigma * h.sigma);
  return out;
}

// ---------------------------------------------------------------------------
// Conjugate normal mean

NormalMeanModel::NormalMeanModel(std::string name, std::vector<double> y, double noise_sd,
                                 double prior_mean, double prior_sd)
    : Model(std::move(name), {{"mu", Family::Normal}}),
      y_(std::move(y)),
      noise_sd_(noise_sd),
      prior_mean_(prior_mean),
      prior_sd_(prior_sd) {
  if (!(noise_sd > 0.0 && prior_sd > 0.0)) throw DomainError("normal-mean model: sds must be positive");
  for (double v : y_) {
    sum_ += v;
    sum_sq_ += v * v;
  }
}

template <class T>
T NormalMeanModel::log_likelihood_impl(std::span<const T> theta) const {
  check_theta(theta.size());
  const double n = static_cast<double>(y_.size());
  if (y_.empty()) return T(0.0);
  const double var = noise_sd_ * noise_sd_;
  const T& mu = theta[0];
  return -0.5 * n * (kLogTwoPi + std::log(var)) -
         (sum_sq_ - 2.0 * mu * sum_ + n * mu * mu) / (2.0 * var);
}

double NormalMeanModel::log_likelihood(std::span<const double> theta) const {
  return log_likelihood_impl(theta);
}
ad::Var NormalMeanModel::log_likelihood(std::span<const ad::Var> theta) const {
  return log_likelihood_impl(theta);
}

double NormalMeanModel::log_prior(std::span<const double> theta) const {
  check_theta(theta.size());
  return normal_log_density(theta[0], prior_mean_, prior_sd_ * prior_sd_);
}

ad::Var NormalMeanModel::log_prior(std::span<const ad::Var> theta) const {
  check_theta(theta.size());
  const double var = prior_sd_ * prior_sd_;
  const ad::Var d = theta[0] - prior_mean_;
  return -0.5 * (kLogTwoPi + std::log(var)) - d * d / (2.0 * var);
}

std::vector<double> NormalMeanModel::sample_prior(Rng& rng) const {
  return {prior_mean_ + prior_sd_ * standard_normal(rng)};
}

Predictive NormalMeanModel::predict(std::span<const double> theta,
                                    const Eigen::MatrixXd& points) const {
  check_theta(theta.size());
  Predictive out;
  out.mean = Eigen::VectorXd::Constant(points.rows(), theta[0]);
  out.latent_variance = Eigen::VectorXd::Zero(points.rows());
  out.noise_variance = Eigen::VectorXd::Constant(points.rows(), noise_sd_ * noise_sd_);
  return out;
}

}  // namespace vbma
