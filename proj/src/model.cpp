#include "vbma/model.hpp"

#include <cmath>

#include "vbma/errors.hpp"

namespace vbma {

Model::Model(std::string name, ParamLayout layout)
    : name_(std::move(name)), layout_(std::move(layout)) {}

std::size_t Model::find_parameter(const std::string& name) const {
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    if (layout_[i].name == name) return i;
  }
  return npos;
}

void Model::set_prior_weight(double w) {
  if (!(w > 0.0 && w <= 1.0)) {
    throw DomainError("model '" + name_ + "': prior weight must lie in (0, 1]");
  }
  prior_weight_ = w;
}

void Model::check_theta(std::size_t size) const {
  if (size != layout_.size()) {
    throw DimensionError("model '" + name_ + "': expected " + std::to_string(layout_.size()) +
                         " parameters, got " + std::to_string(size));
  }
}

std::vector<double> Model::sample_prior(Rng&) const {
  throw ConfigError("model '" + name_ + "' has an improper prior; it cannot be sampled");
}

Eigen::VectorXd Model::predictive_draw(std::span<const double> theta,
                                       const Eigen::MatrixXd& points, bool noise,
                                       Rng& rng) const {
  const Predictive p = predict(theta, points);
  Eigen::VectorXd out(p.mean.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (p.kind == Predictive::Kind::Bernoulli) {
      out[i] = noise ? (uniform01(rng) < p.mean[i] ? 1.0 : 0.0) : p.mean[i];
    } else {
      const double var = p.latent_variance[i] + (noise ? p.noise_variance[i] : 0.0);
      const double z = standard_normal(rng);
      out[i] = var > 0.0 ? p.mean[i] + std::sqrt(var) * z : p.mean[i];
    }
  }
  return out;
}

void assign_uniform_prior(std::vector<std::shared_ptr<Model>>& models) {
  for (auto& m : models) m->set_prior_weight(1.0 / static_cast<double>(models.size()));
}

}  // namespace vbma
