#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracle {

namespace {

constexpr double kPi = 3.14159265358979323846;

double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double log_abs_det(Matrix a) {
  const std::size_t n = a.size();
  double acc = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    if (a[piv][c] == 0.0) throw std::runtime_error("singular matrix");
    std::swap(a[piv], a[c]);
    acc += std::log(std::abs(a[c][c]));
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return acc;
}

std::vector<double> solve(Matrix a, std::vector<double> b) {
  const std::size_t n = a.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    std::swap(a[piv], a[c]);
    std::swap(b[piv], b[c]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

double linreg_log_joint(const Matrix& x, const std::vector<double>& y, double g,
                        const std::vector<double>& theta) {
  const std::size_t n = y.size();
  const std::size_t p = theta.size() - 2;
  const double beta0 = theta[0];
  const double phi = theta.back();
  double ll = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double mu = beta0;
    for (std::size_t j = 0; j < p; ++j) mu += theta[j + 1] * x[i][j];
    const double r = y[i] - mu;
    ll += 0.5 * std::log(phi) - 0.5 * std::log(2.0 * kPi) - 0.5 * phi * r * r;
  }
  double lp = -std::log(phi);
  if (p > 0) {
    Matrix prec(p, std::vector<double>(p, 0.0));
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = 0; b < p; ++b) {
        for (std::size_t i = 0; i < n; ++i) prec[a][b] += x[i][a] * x[i][b];
        prec[a][b] *= phi / g;
      }
    }
    double quad = 0.0;
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = 0; b < p; ++b) quad += theta[a + 1] * prec[a][b] * theta[b + 1];
    }
    lp += -0.5 * static_cast<double>(p) * std::log(2.0 * kPi) + 0.5 * log_abs_det(prec) - 0.5 * quad;
  }
  return ll + lp;
}

double logistic_log_joint(const Matrix& x, const std::vector<double>& y, double sd,
                          const std::vector<double>& theta) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double eta = theta[0];
    for (std::size_t j = 1; j < theta.size(); ++j) eta += theta[j] * x[i][j - 1];
    // log p = y eta - log(1 + e^eta), written in a branch-stable form.
    const double log1pexp = eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
    total += y[i] * eta - log1pexp;
  }
  for (double b : theta) total += -0.5 * std::log(2.0 * kPi * sd * sd) - 0.5 * b * b / (sd * sd);
  return total;
}

double gp_log_marginal(const Matrix& x, const std::vector<double>& y, double mean, double eta,
                       double nu1, double nu2, double sigma, double jitter) {
  const std::size_t n = y.size();
  Matrix a(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d1 = x[i][0] - x[j][0], d2 = x[i][1] - x[j][1];
      a[i][j] = eta * eta * std::exp(-d1 * d1 / (2 * nu1 * nu1) - d2 * d2 / (2 * nu2 * nu2));
    }
    a[i][i] += sigma * sigma + jitter;
  }
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - mean;
  const std::vector<double> alpha = solve(a, r);
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) quad += r[i] * alpha[i];
  return -0.5 * quad - 0.5 * log_abs_det(a) - 0.5 * static_cast<double>(n) * std::log(2.0 * kPi);
}

std::vector<double> gp_predictive_mean(const Matrix& x, const std::vector<double>& y, double mean, double eta,
                                       double nu1, double nu2, double sigma, const Matrix& x_new) {
  auto k = [&](const std::vector<double>& a, const std::vector<double>& b) {
    const double d1 = a[0] - b[0], d2 = a[1] - b[1];
    return eta * eta * std::exp(-d1 * d1 / (2 * nu1 * nu1) - d2 * d2 / (2 * nu2 * nu2));
  };
  const std::size_t n = y.size();
  Matrix a(n, std::vector<double>(n));
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i][j] = k(x[i], x[j]);
    a[i][i] += sigma * sigma;
    r[i] = y[i] - mean;
  }
  const std::vector<double> alpha = solve(a, r);
  std::vector<double> out;
  for (const auto& p : x_new) {
    double v = mean;
    for (std::size_t i = 0; i < n; ++i) v += k(p, x[i]) * alpha[i];
    out.push_back(v);
  }
  return out;
}

double NormalMean::posterior_variance() const {
  return 1.0 / (1.0 / (s0 * s0) + static_cast<double>(y.size()) / (s * s));
}

double NormalMean::posterior_mean() const {
  double sum = 0.0;
  for (double v : y) sum += v;
  return posterior_variance() * (m0 / (s0 * s0) + sum / (s * s));
}

double NormalMean::log_evidence() const {
  const std::size_t n = y.size();
  if (n == 0) return 0.0;
  Matrix cov(n, std::vector<double>(n, s0 * s0));
  for (std::size_t i = 0; i < n; ++i) cov[i][i] += s * s;
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - m0;
  const auto alpha = solve(cov, r);
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) quad += r[i] * alpha[i];
  return -0.5 * quad - 0.5 * log_abs_det(cov) - 0.5 * static_cast<double>(n) * std::log(2.0 * kPi);
}

double NormalMean::elbo(double m, double v) const {
  double e = 0.0;
  for (double yi : y) e += -0.5 * std::log(2.0 * kPi * s * s) - ((yi - m) * (yi - m) + v) / (2.0 * s * s);
  e += -0.5 * std::log(2.0 * kPi * s0 * s0) - ((m - m0) * (m - m0) + v) / (2.0 * s0 * s0);
  e += 0.5 * std::log(2.0 * kPi * std::exp(1.0) * v);
  return e;
}

std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

double ks_critical_001(double n, double m) {
  const double c = 1.6276;
  return m > 0.0 ? c * std::sqrt((n + m) / (n * m)) : c / std::sqrt(n);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, b, fa, fm, fb, whole, tol, 50);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace oracle
