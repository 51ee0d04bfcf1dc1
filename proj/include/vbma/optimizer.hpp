#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vbma {

enum class OptimizerKind { Adam, RmsProp, Sga };

const char* optimizer_name(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& name);

/// rho_t = a / (b + t)^kappa, or a constant a.
struct StepSchedule {
  bool constant = true;
  double a = 0.05;
  double b = 0.0;
  double kappa = 1.0;

  double rate(std::int64_t t) const;
};

/// True iff sum rho_t diverges while sum rho_t^2 converges. Constant schedules
/// return false; they remain usable.
bool robbins_monro_check(const StepSchedule& schedule);

struct OptimizerSettings {
  OptimizerKind kind = OptimizerKind::Adam;
  double step_size = 0.05;  ///< Adam default; RMSprop callers usually pass 0.01.
  double beta1 = 0.9;       ///< Adam first-moment decay.
  double beta2 = 0.999;     ///< Adam second-moment decay; RMSprop mean-square decay.
  double eps = 1e-8;
  StepSchedule schedule{};  ///< Only used by plain SGA.

  static OptimizerSettings adam() { return {}; }
  static OptimizerSettings rmsprop() {
    OptimizerSettings s;
    s.kind = OptimizerKind::RmsProp;
    s.step_size = 0.01;
    s.beta2 = 0.9;
    return s;
  }
};

struct StepResult {
  bool applied = true;
  std::string diagnostic;  ///< Why the step was rejected.
};

/// Ascent optimizer for one parameter vector. Moves parameters along +g.
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(OptimizerSettings settings, std::size_t size);

  /// Applies one ascent step. A gradient with non-finite entries is rejected
  /// and leaves both the parameters and the optimizer state untouched.
  StepResult step(std::span<double> params, std::span<const double> gradient);

  const OptimizerSettings& settings() const noexcept { return settings_; }
  std::int64_t steps() const noexcept { return t_; }
  const std::vector<double>& first_moment() const noexcept { return m_; }
  const std::vector<double>& second_moment() const noexcept { return v_; }

  /// Restores a saved state (checkpoint resume).
  void restore(std::int64_t t, std::vector<double> m, std::vector<double> v);

 private:
  OptimizerSettings settings_;
  std::int64_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

}  // namespace vbma
