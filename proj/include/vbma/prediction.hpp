#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "vbma/families.hpp"
#include "vbma/model.hpp"
#include "vbma/rng.hpp"

namespace vbma {

/// Draws theta for component `model` of a mixture.
using ThetaSampler = std::function<std::vector<double>(std::size_t model, Rng& rng)>;

/// sum_M q(M) q(theta | M, lambda_M): the variational model-averaged posterior.
struct BmaPosterior {
  std::vector<ModelPtr> models;
  std::vector<VariationalState> states;
  std::vector<double> weights;

  void validate() const;
  ThetaSampler sampler() const;
};

/// Index drawn from a categorical distribution with probabilities `weights`.
std::size_t draw_component(std::span<const double> weights, Rng& rng);

/// Predictive draws from a mixture, one column per draw (points x draws).
/// Draw d picks M ~ q, theta ~ sampler(M) and then one predictive draw, all
/// from substream (seed, d).
Eigen::MatrixXd mixture_draw(const std::vector<ModelPtr>& models, std::span<const double> weights,
                             const ThetaSampler& sampler, const Eigen::MatrixXd& points,
                             int n_draws, std::uint64_t seed, bool noise, int threads = 1);

Eigen::MatrixXd bma_draw(const BmaPosterior& posterior, const Eigen::MatrixXd& points, int n_draws,
                         std::uint64_t seed, bool noise, int threads = 1);

/// Mixture predictive mean, averaging the conditional means E[y | theta, M]
/// over n_draws parameter draws.
Eigen::VectorXd mixture_mean(const std::vector<ModelPtr>& models, std::span<const double> weights,
                             const ThetaSampler& sampler, const Eigen::MatrixXd& points,
                             int n_draws, std::uint64_t seed, int threads = 1);

struct BayesFactor {
  double value = 1.0;
  bool infinite = false;   ///< q_j = 0 with q_i > 0.
  bool undefined = false;  ///< q_i = q_j = 0.
};

/// (q_i / q_j) (p_j / p_i).
BayesFactor bayes_factor(std::span<const double> q, std::span<const double> prior, std::size_t i,
                         std::size_t j);

/// Linear interpolation between order statistics (type 7).
double quantile(std::vector<double> values, double p);
double quantile_sorted(std::span<const double> sorted, double p);

/// Empirical (alpha/2, 1 - alpha/2) quantiles.
std::pair<double, double> equal_tail_interval(std::span<const double> draws, double alpha);

/// Fraction of truth values inside their central interval at each level;
/// level l uses alpha = 1 - l. `draws` is points x draws.
std::vector<double> coverage_curve(const Eigen::MatrixXd& draws, const Eigen::VectorXd& truth,
                                   std::span<const double> levels);

std::vector<double> default_levels();

struct CoefficientSummary {
  std::string name;
  double inclusion_probability = 0.0;
  std::vector<double> grid;
  std::vector<double> density;  ///< Unscaled KDE of the included-model draws.
  double bandwidth = 0.0;

  /// Density rescaled so its maximum equals the inclusion probability.
  std::vector<double> scaled_density() const;
};

/// Inclusion probability sum_{M contains beta} q(M), plus a Gaussian KDE
/// (Silverman bandwidth) of beta drawn from the including models mixed by q.
CoefficientSummary coefficient_summary(const BmaPosterior& posterior, const std::string& coefficient,
                                       int n_draws = 20000, std::uint64_t seed = 1,
                                       int grid_points = 200);

double rmse(std::span<const double> predictions, std::span<const double> truth);

}  // namespace vbma
