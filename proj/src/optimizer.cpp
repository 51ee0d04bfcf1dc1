#include "vbma/optimizer.hpp"

#include <cmath>

#include "vbma/errors.hpp"

namespace vbma {

const char* optimizer_name(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::RmsProp: return "rmsprop";
    case OptimizerKind::Sga: return "sga";
  }
  return "unknown";
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "rmsprop") return OptimizerKind::RmsProp;
  if (name == "sga") return OptimizerKind::Sga;
  throw ConfigError("unknown optimizer '" + name + "' (expected adam, rmsprop or sga)");
}

double StepSchedule::rate(std::int64_t t) const {
  if (constant) return a;
  return a / std::pow(b + static_cast<double>(t), kappa);
}

bool robbins_monro_check(const StepSchedule& schedule) {
  if (schedule.constant) return false;
  // sum a/(b+t)^k diverges iff k <= 1; the squares converge iff 2k > 1.
  return schedule.a > 0.0 && schedule.kappa > 0.5 && schedule.kappa <= 1.0;
}

Optimizer::Optimizer(OptimizerSettings settings, std::size_t size)
    : settings_(settings), m_(size, 0.0), v_(size, 0.0) {
  if (!(settings.step_size > 0.0)) throw ConfigError("optimizer step size must be positive");
  if (!(settings.beta1 >= 0.0 && settings.beta1 < 1.0 && settings.beta2 >= 0.0 &&
        settings.beta2 < 1.0)) {
    throw ConfigError("optimizer decay rates must lie in [0, 1)");
  }
  if (!(settings.eps >= 0.0)) throw ConfigError("optimizer eps must be non-negative");
}

StepResult Optimizer::step(std::span<double> params, std::span<const double> gradient) {
  if (params.size() != m_.size() || gradient.size() != m_.size()) {
    throw DimensionError("optimizer: expected " + std::to_string(m_.size()) +
                         " coordinates, got params " + std::to_string(params.size()) +
                         " and gradient " + std::to_string(gradient.size()));
  }
  for (std::size_t i = 0; i < gradient.size(); ++i) {
    if (!std::isfinite(gradient[i])) {
      return {false, "non-finite gradient at coordinate " + std::to_string(i)};
    }
  }
  ++t_;
  const auto& s = settings_;
  switch (s.kind) {
    case OptimizerKind::Adam: {
      const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(t_));
      const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(t_));
      for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = s.beta1 * m_[i] + (1.0 - s.beta1) * gradient[i];
        v_[i] = s.beta2 * v_[i] + (1.0 - s.beta2) * gradient[i] * gradient[i];
        params[i] += s.step_size * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + s.eps);
      }
      break;
    }
    case OptimizerKind::RmsProp: {
      for (std::size_t i = 0; i < params.size(); ++i) {
        v_[i] = s.beta2 * v_[i] + (1.0 - s.beta2) * gradient[i] * gradient[i];
        params[i] += s.step_size * gradient[i] / (std::sqrt(v_[i]) + s.eps);
      }
      break;
    }
    case OptimizerKind::Sga: {
      const double rho = s.schedule.rate(t_);
      for (std::size_t i = 0; i < params.size(); ++i) params[i] += rho * gradient[i];
      break;
    }
  }
  return {};
}

void Optimizer::restore(std::int64_t t, std::vector<double> m, std::vector<double> v) {
  if (m.size() != m_.size() || v.size() != v_.size()) {
    throw DimensionError("optimizer restore: moment vectors have the wrong length");
  }
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace vbma
