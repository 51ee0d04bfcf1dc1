#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>

namespace vbma {

inline constexpr double kLogTwoPi = 1.8378770664093454836;  // log(2*pi)

/// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double log_sigmoid(double x) { return -softplus(-x); }

/// Inverse of softplus: log(e^y - 1) for y > 0.
inline double softplus_inverse(double y) {
  return y > 30.0 ? y + std::log1p(-std::exp(-y)) : std::log(std::expm1(y));
}

/// log(sum(exp(v))), max-subtracted. Returns -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> v) {
  double m = -INFINITY;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline double normal_log_density(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * (kLogTwoPi + std::log(variance)) - 0.5 * d * d / variance;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Plain-double counterparts of the fused tape operations, so model code can
/// be written once for double and ad::Var.
inline double dot(std::span<const double> a, std::span<const double> b, double offset = 0.0) {
  double s = offset;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace vbma
