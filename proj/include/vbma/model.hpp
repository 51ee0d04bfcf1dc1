#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vbma/autodiff.hpp"
#include "vbma/families.hpp"
#include "vbma/rng.hpp"

namespace vbma {

/// Conditional predictive distribution at a batch of points for one theta.
struct Predictive {
  enum class Kind { Gaussian, Bernoulli };
  Kind kind = Kind::Gaussian;
  Eigen::VectorXd mean;            ///< E[f(x) | theta]; a probability for Bernoulli.
  Eigen::VectorXd latent_variance; ///< Var[f(x) | theta, d]; zero for parametric models.
  Eigen::VectorXd noise_variance;  ///< Observation noise added when drawing with noise.
};

/// A candidate model M: likelihood p(d | theta, M), prior p(theta | M),
/// parameter layout and prior model weight p(M).
///
/// Instances are immutable after construction and evaluation is reentrant.
class Model {
 public:
  virtual ~Model() = default;

  const std::string& name() const noexcept { return name_; }
  const ParamLayout& layout() const noexcept { return layout_; }
  std::size_t dimension() const noexcept { return layout_.size(); }
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  /// Index of a named parameter, or npos.
  std::size_t find_parameter(const std::string& name) const;

  double prior_weight() const noexcept { return prior_weight_; }
  void set_prior_weight(double w);

  virtual double log_likelihood(std::span<const double> theta) const = 0;
  virtual ad::Var log_likelihood(std::span<const ad::Var> theta) const = 0;
  /// May be improper: then defined up to a constant shared by the ensemble.
  virtual double log_prior(std::span<const double> theta) const = 0;
  virtual ad::Var log_prior(std::span<const ad::Var> theta) const = 0;

  double log_joint(std::span<const double> theta) const {
    return log_likelihood(theta) + log_prior(theta);
  }
  ad::Var log_joint(std::span<const ad::Var> theta) const {
    return log_likelihood(theta) + log_prior(theta);
  }

  virtual bool has_proper_prior() const = 0;
  /// One draw from p(theta | M). Throws ConfigError for improper priors.
  virtual std::vector<double> sample_prior(Rng& rng) const;

  /// Predictive kernel p(y_new | d, M, theta) at each row of `points`. Rows
  /// hold the full candidate predictor vector; the model picks its columns.
  virtual Predictive predict(std::span<const double> theta, const Eigen::MatrixXd& points) const = 0;

  /// One draw per point from the predictive kernel, with or without noise.
  Eigen::VectorXd predictive_draw(std::span<const double> theta, const Eigen::MatrixXd& points,
                                  bool noise, Rng& rng) const;

  /// Candidate predictor names entering the model (empty for non-regression models).
  virtual std::vector<std::string> predictors() const { return {}; }

 protected:
  Model(std::string name, ParamLayout layout);
  void check_theta(std::size_t size) const;

 private:
  std::string name_;
  ParamLayout layout_;
  double prior_weight_ = 1.0;
};

using ModelPtr = std::shared_ptr<const Model>;

/// Sets every weight to 1/K.
void assign_uniform_prior(std::vector<std::shared_ptr<Model>>& models);

}  // namespace vbma
