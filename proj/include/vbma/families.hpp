#pragma once

// Mean-field variational families.
//
// Each coordinate carries a location mu and an unconstrained raw scale r. The
// variance of the underlying normal is softplus(r) = log(e^r + 1), so the
// optimizer works on an unconstrained vector. Coordinates are either
//   Normal:    theta = mu + z * sqrt(softplus(r))
//   LogNormal: theta = exp(mu + z * sqrt(softplus(r)))
// with z ~ N(0, 1).

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vbma/errors.hpp"
#include "vbma/math.hpp"

namespace vbma {

enum class Family : std::uint8_t { Normal, LogNormal };

const char* family_name(Family f);
Family parse_family(const std::string& name);

struct ParamInfo {
  std::string name;
  Family family = Family::Normal;
};

using ParamLayout = std::vector<ParamInfo>;

inline double value_of(double x) { return x; }

/// Positive scale (the variance of the underlying normal) from a raw value.
inline double decode_scale(double raw) { return softplus(raw); }

/// Raw value whose decoded scale is `scale`.
double encode_scale(double scale);

class VariationalState {
 public:
  VariationalState() = default;
  /// mu = 0 everywhere, raw scales set so every variance equals `initial_variance`.
  explicit VariationalState(const ParamLayout& layout, double initial_variance = 0.01);

  std::size_t size() const noexcept { return location.size(); }
  ParamLayout layout() const;

  double variance(std::size_t i) const { return decode_scale(raw_scale[i]); }
  double sd(std::size_t i) const { return std::sqrt(variance(i)); }

  /// [mu_0 .. mu_{d-1}, r_0 .. r_{d-1}]
  std::vector<double> packed() const;
  void unpack(std::span<const double> packed);

  std::vector<std::string> names;
  std::vector<Family> families;
  std::vector<double> location;
  std::vector<double> raw_scale;
};

/// theta = t(z, lambda), written for double and ad::Var alike.
template <class T>
std::vector<T> reparam_transform(std::span<const T> location, std::span<const T> raw_scale,
                                 std::span<const Family> families, std::span<const double> z) {
  using std::exp;
  using std::sqrt;
  using vbma::softplus;
  if (z.size() != location.size() || raw_scale.size() != location.size() ||
      families.size() != location.size()) {
    throw DimensionError("reparam_transform: expected " + std::to_string(location.size()) +
                         " coordinates, got z of length " + std::to_string(z.size()));
  }
  std::vector<T> theta;
  theta.reserve(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const T normal = location[i] + z[i] * sqrt(softplus(raw_scale[i]));
    theta.push_back(families[i] == Family::LogNormal ? exp(normal) : normal);
  }
  return theta;
}

std::vector<double> reparam_sample(const VariationalState& state, std::span<const double> z);

/// log q(theta | lambda) with lambda held fixed. Templated on theta's scalar so
/// the gradient with respect to theta alone can be taken on a tape.
template <class T>
T log_q(const VariationalState& state, std::span<const T> theta) {
  using std::log;
  if (theta.size() != state.size()) {
    throw DimensionError("log_q: expected " + std::to_string(state.size()) +
                         " coordinates, got " + std::to_string(theta.size()));
  }
  T total = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double var = state.variance(i);
    const double norm = -0.5 * (kLogTwoPi + std::log(var));
    if (state.families[i] == Family::LogNormal) {
      if (!(value_of(theta[i]) > 0.0)) {
        throw DomainError("log_q: log-normal coordinate '" + state.names[i] +
                          "' must be positive");
      }
      const T lt = log(theta[i]);
      const T d = lt - state.location[i];
      total += norm - d * d / (2.0 * var) - lt;
    } else {
      const T d = theta[i] - state.location[i];
      total += norm - d * d / (2.0 * var);
    }
  }
  return total;
}

std::string to_text(const VariationalState& state);
VariationalState variational_state_from_text(const std::string& text);

}  // namespace vbma
