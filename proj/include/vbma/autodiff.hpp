#pragma once

// Reverse-mode differentiation of scalar functions.
//
// A Tape records every elementary operation applied to Var values; a single
// reverse sweep from a scalar output then yields the gradient with respect to
// all recorded inputs. The operation set is closed: a model written against
// Var can only use the overloads declared here, so anything outside the set
// fails to compile instead of silently losing derivative information.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vbma/errors.hpp"

namespace vbma::ad {

enum class Op : std::uint8_t {
  Input,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Exp,
  Log,
  Sqrt,
  Tanh,
  Softplus,
  Sigmoid,
  Pow,
  Sum,
  Dot,
  Primitive,
};

const char* op_name(Op op);

class Tape;

/// Scalar tracked by a Tape. A default or double-constructed Var is a
/// constant and carries no tape; its derivative is identically zero.
class Var {
 public:
  Var() = default;
  Var(double constant) : value_(constant) {}  // NOLINT(google-explicit-constructor)

  double value() const noexcept { return value_; }
  bool is_constant() const noexcept { return tape_ == nullptr; }
  Tape* tape() const noexcept { return tape_; }
  std::uint32_t index() const noexcept { return index_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t index, double value) : tape_(tape), index_(index), value_(value) {}

  Tape* tape_ = nullptr;
  std::uint32_t index_ = 0;
  double value_ = 0.0;
};

/// Single-use evaluation trace. Not copyable or movable: every Var recorded on
/// it holds its address. Confined to one thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var input(double value);
  std::vector<Var> inputs(std::span<const double> values);

  std::size_t input_count() const noexcept { return inputs_.size(); }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Records a node with explicit local partial derivatives. Constant parents
  /// are dropped. Used by the elementary operations and by composite
  /// primitives that supply their own vector-Jacobian product.
  Var record(Op op, double value, std::span<const Var> parents, std::span<const double> partials);
  Var record(Op op, double value, const Var& a, double da);
  Var record(Op op, double value, const Var& a, double da, const Var& b, double db);

  /// Reverse sweep from `output`. Returns d output / d input for each input in
  /// creation order. Throws NonFiniteError naming the first operation whose
  /// value or local partial is not finite.
  std::vector<double> gradient(const Var& output) const;

 private:
  struct Node {
    Op op;
    std::uint32_t first;
    std::uint32_t count;
  };

  void check_node(std::size_t i) const;

  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<std::uint32_t> parents_;
  std::vector<double> partials_;
  std::vector<std::uint32_t> inputs_;
};

inline double value_of(const Var& v) { return v.value(); }

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }
inline Var& operator/=(Var& a, const Var& b) { return a = a / b; }

Var exp(const Var& x);
Var log(const Var& x);
Var sqrt(const Var& x);
Var tanh(const Var& x);
Var softplus(const Var& x);
Var sigmoid(const Var& x);
Var pow(const Var& x, double exponent);
Var pow(const Var& x, const Var& exponent);

inline Var log_sigmoid(const Var& x) { return -softplus(-x); }

/// Fused n-ary sum; one node instead of n-1 additions.
Var sum(std::span<const Var> terms);
/// Fused sum_i coef[i] * x[i] + offset with constant x.
Var dot(std::span<const Var> coef, std::span<const double> x, double offset = 0.0);

struct ValueAndGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

/// Value and exact gradient of f at x. `f` maps std::span<const Var> to Var.
template <class F>
ValueAndGradient grad(F&& f, std::span<const double> x) {
  Tape tape;
  const std::vector<Var> in = tape.inputs(x);
  const Var y = f(std::span<const Var>(in));
  return {y.value(), tape.gradient(y)};
}

/// Forward evaluation only.
template <class F>
double evaluate(F&& f, std::span<const double> x) {
  Tape tape;
  const std::vector<Var> in = tape.inputs(x);
  return f(std::span<const Var>(in)).value();
}

/// max_i |grad_i - central_difference_i| / (|grad_i| + h).
template <class F>
double finite_diff_check(F&& f, std::span<const double> x, double h) {
  if (!(h > 0.0)) throw DomainError("finite_diff_check: step must be positive");
  const std::vector<double> g = grad(f, x).gradient;
  std::vector<double> probe(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double up = evaluate(f, probe);
    probe[i] = saved - h;
    const double down = evaluate(f, probe);
    probe[i] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double d = std::abs(g[i] - fd) / (std::abs(g[i]) + h);
    if (d > worst) worst = d;
  }
  return worst;
}

}  // namespace vbma::ad
