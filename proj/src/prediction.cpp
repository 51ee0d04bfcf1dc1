#include "vbma/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vbma/errors.hpp"
#include "vbma/vbma.hpp"

namespace vbma {

void BmaPosterior::validate() const {
  if (models.empty()) throw ConfigError("posterior has no models");
  if (states.size() != models.size() || weights.size() != models.size()) {
    throw DimensionError("posterior: models, states and weights differ in length");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw DomainError("posterior weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("posterior weights must sum to 1");
}

ThetaSampler BmaPosterior::sampler() const {
  return [this](std::size_t m, Rng& rng) {
    std::vector<double> z(states[m].size());
    fill_standard_normal(rng, z);
    return reparam_sample(states[m], z);
  };
}

std::size_t draw_component(std::span<const double> weights, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t m = 0; m < weights.size(); ++m) {
    if (weights[m] <= 0.0) continue;
    acc += weights[m];
    last = m;
    if (u < acc) return m;
  }
  return last;
}

namespace {

void check_mixture(const std::vector<ModelPtr>& models, std::span<const double> weights, int n_draws) {
  if (models.empty()) throw ConfigError("mixture has no models");
  if (weights.size() != models.size()) throw DimensionError("mixture weights and models differ in length");
  if (n_draws < 1) throw ConfigError("at least one draw is required");
}

}  // namespace

Eigen::MatrixXd mixture_draw(const std::vector<ModelPtr>& models, std::span<const double> weights,
                             const ThetaSampler& sampler, const Eigen::MatrixXd& points,
                             int n_draws, std::uint64_t seed, bool noise, int threads) {
  check_mixture(models, weights, n_draws);
  Eigen::MatrixXd out(points.rows(), n_draws);
  parallel_for(static_cast<std::size_t>(n_draws), threads, [&](std::size_t d) {
    Rng rng = substream(seed, 0xd7a3, d);
    const std::size_t m = draw_component(weights, rng);
    const std::vector<double> theta = sampler(m, rng);
    out.col(static_cast<Eigen::Index>(d)) = models[m]->predictive_draw(theta, points, noise, rng);
  });
  return out;
}

Eigen::MatrixXd bma_draw(const BmaPosterior& posterior, const Eigen::MatrixXd& points, int n_draws,
                         std::uint64_t seed, bool noise, int threads) {
  posterior.validate();
  return mixture_draw(posterior.models, posterior.weights, posterior.sampler(), points, n_draws,
                      seed, noise, threads);
}

Eigen::VectorXd mixture_mean(const std::vector<ModelPtr>& models, std::span<const double> weights,
                             const ThetaSampler& sampler, const Eigen::MatrixXd& points,
                             int n_draws, std::uint64_t seed, int threads) {
  check_mixture(models, weights, n_draws);
  Eigen::MatrixXd means(points.rows(), n_draws);
  parallel_for(static_cast<std::size_t>(n_draws), threads, [&](std::size_t d) {
    Rng rng = substream(seed, 0x3ea2, d);
    const std::size_t m = draw_component(weights, rng);
    const std::vector<double> theta = sampler(m, rng);
    means.col(static_cast<Eigen::Index>(d)) = models[m]->predict(theta, points).mean;
  });
  return means.rowwise().mean();
}

BayesFactor bayes_factor(std::span<const double> q, std::span<const double> prior, std::size_t i,
                         std::size_t j) {
  if (q.size() != prior.size()) throw DimensionError("bayes_factor: weights and priors differ in length");
  if (i >= q.size() || j >= q.size()) throw LookupError("bayes_factor: model index out of range");
  if (!(prior[i] > 0.0) || !(prior[j] > 0.0)) throw DomainError("bayes_factor: prior weights must be positive");
  BayesFactor bf;
  if (q[j] <= 0.0) {
    bf.infinite = q[i] > 0.0;
    bf.undefined = !(q[i] > 0.0);
    bf.value = bf.infinite ? INFINITY : NAN;
    return bf;
  }
  bf.value = (q[i] / q[j]) * (prior[j] / prior[i]);
  return bf;
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DomainError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile probability must lie in [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, p);
}

std::pair<double, double> equal_tail_interval(std::span<const double> draws, double alpha) {
  if (draws.empty()) throw DomainError("interval of an empty sample");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  std::vector<double> s(draws.begin(), draws.end());
  std::sort(s.begin(), s.end());
  return {quantile_sorted(s, 0.5 * alpha), quantile_sorted(s, 1.0 - 0.5 * alpha)};
}

std::vector<double> coverage_curve(const Eigen::MatrixXd& draws, const Eigen::VectorXd& truth,
                                   std::span<const double> levels) {
  if (truth.size() == 0) throw DomainError("coverage needs a non-empty test set");
  if (draws.rows() != truth.size()) throw DimensionError("coverage: draws and truth differ in rows");
  std::vector<double> hits(levels.size(), 0.0);
  std::vector<double> row(static_cast<std::size_t>(draws.cols()));
  for (Eigen::Index i = 0; i < draws.rows(); ++i) {
    for (Eigen::Index d = 0; d < draws.cols(); ++d) row[static_cast<std::size_t>(d)] = draws(i, d);
    std::sort(row.begin(), row.end());
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const double alpha = 1.0 - levels[l];
      const double lo = quantile_sorted(row, 0.5 * alpha);
      const double hi = quantile_sorted(row, 1.0 - 0.5 * alpha);
      if (truth(i) >= lo && truth(i) <= hi) hits[l] += 1.0;
    }
  }
  for (double& h : hits) h /= static_cast<double>(truth.size());
  return hits;
}

std::vector<double> default_levels() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}; }

std::vector<double> CoefficientSummary::scaled_density() const {
  std::vector<double> out(density);
  const double peak = density.empty() ? 0.0 : *std::max_element(density.begin(), density.end());
  if (peak > 0.0) {
    for (double& v : out) v *= inclusion_probability / peak;
  }
  return out;
}

CoefficientSummary coefficient_summary(const BmaPosterior& posterior, const std::string& coefficient,
                                       int n_draws, std::uint64_t seed, int grid_points) {
  posterior.validate();
  if (n_draws < 2) throw ConfigError("coefficient summary needs at least two draws");
  if (grid_points < 2) throw ConfigError("coefficient summary needs at least two grid points");
  const std::string param = "beta[" + coefficient + "]";
  CoefficientSummary s;
  s.name = coefficient;
  std::vector<double> w(posterior.models.size(), 0.0);
  std::vector<std::size_t> index(posterior.models.size(), Model::npos);
  bool present = false;
  for (std::size_t m = 0; m < posterior.models.size(); ++m) {
    index[m] = posterior.models[m]->find_parameter(param);
    if (index[m] != Model::npos) {
      present = true;
      w[m] = posterior.weights[m];
      s.inclusion_probability += w[m];
    }
  }
  if (!present) throw LookupError("coefficient '" + coefficient + "' appears in no model");
  s.inclusion_probability = std::min(1.0, s.inclusion_probability);
  if (s.inclusion_probability <= 0.0) return s;
  for (double& v : w) v /= s.inclusion_probability;

  std::vector<double> draws(static_cast<std::size_t>(n_draws));
  for (int d = 0; d < n_draws; ++d) {
    Rng rng = substream(seed, 0xc0ef, static_cast<std::uint64_t>(d));
    const std::size_t m = draw_component(w, rng);
    std::vector<double> z(posterior.states[m].size());
    fill_standard_normal(rng, z);
    draws[static_cast<std::size_t>(d)] = reparam_sample(posterior.states[m], z)[index[m]];
  }
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(n_draws);
  double mean = 0.0;
  for (double v : draws) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : draws) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / (n - 1.0));
  const double iqr = quantile_sorted(draws, 0.75) - quantile_sorted(draws, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd > 0.0 ? sd : 1e-6;
  s.bandwidth = 0.9 * spread * std::pow(n, -0.2);

  const double lo = draws.front() - 3.0 * s.bandwidth;
  const double hi = draws.back() + 3.0 * s.bandwidth;
  s.grid.resize(static_cast<std::size_t>(grid_points));
  s.density.assign(static_cast<std::size_t>(grid_points), 0.0);
  const double norm = 1.0 / (n * s.bandwidth * std::sqrt(2.0 * std::numbers::pi));
  for (int k = 0; k < grid_points; ++k) {
    const double x = lo + (hi - lo) * k / (grid_points - 1);
    s.grid[static_cast<std::size_t>(k)] = x;
    // Draws are sorted, so only those within 8 bandwidths contribute.
    const auto first = std::lower_bound(draws.begin(), draws.end(), x - 8.0 * s.bandwidth);
    const auto last = std::upper_bound(draws.begin(), draws.end(), x + 8.0 * s.bandwidth);
    double acc = 0.0;
    for (auto it = first; it != last; ++it) {
      const double u = (x - *it) / s.bandwidth;
      acc += std::exp(-0.5 * u * u);
    }
    s.density[static_cast<std::size_t>(k)] = acc * norm;
  }
  return s;
}

double rmse(std::span<const double> predictions, std::span<const double> truth) {
  if (predictions.size() != truth.size()) throw DimensionError("rmse: inputs differ in length");
  if (predictions.empty()) throw DomainError("rmse of an empty set");
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = predictions[i] - truth[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(truth.size()));
}

}  // namespace vbma
