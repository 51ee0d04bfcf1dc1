#include "vbma/autodiff.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "vbma/math.hpp"

namespace vbma::ad {

const char* op_name(Op op) {
  switch (op) {
    case Op::Input: return "input";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Neg: return "neg";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Tanh: return "tanh";
    case Op::Softplus: return "softplus";
    case Op::Sigmoid: return "sigmoid";
    case Op::Pow: return "pow";
    case Op::Sum: return "sum";
    case Op::Dot: return "dot";
    case Op::Primitive: return "primitive";
  }
  return "unknown";
}

namespace {

Tape* shared_tape(const Var& a, const Var& b) {
  Tape* t = a.tape() ? a.tape() : b.tape();
  if (a.tape() && b.tape() && a.tape() != b.tape()) {
    throw Error("autodiff: operands recorded on different tapes");
  }
  return t;
}

}  // namespace

Var Tape::input(double value) {
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({Op::Input, static_cast<std::uint32_t>(parents_.size()), 0});
  values_.push_back(value);
  inputs_.push_back(index);
  return Var(this, index, value);
}

std::vector<Var> Tape::inputs(std::span<const double> values) {
  std::vector<Var> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(input(v));
  return out;
}

Var Tape::record(Op op, double value, std::span<const Var> parents,
                 std::span<const double> partials) {
  if (parents.size() != partials.size()) {
    throw DimensionError("autodiff: parents and partials differ in length");
  }
  const auto first = static_cast<std::uint32_t>(parents_.size());
  for (std::size_t k = 0; k < parents.size(); ++k) {
    if (parents[k].is_constant()) continue;
    if (parents[k].tape() != this) throw Error("autodiff: operand recorded on a different tape");
    parents_.push_back(parents[k].index());
    partials_.push_back(partials[k]);
  }
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({op, first, static_cast<std::uint32_t>(parents_.size()) - first});
  values_.push_back(value);
#ifndef NDEBUG
  check_node(index);
#endif
  return Var(this, index, value);
}

Var Tape::record(Op op, double value, const Var& a, double da) {
  const std::array<Var, 1> p{a};
  const std::array<double, 1> d{da};
  return record(op, value, p, d);
}

Var Tape::record(Op op, double value, const Var& a, double da, const Var& b, double db) {
  const std::array<Var, 2> p{a, b};
  const std::array<double, 2> d{da, db};
  return record(op, value, p, d);
}

void Tape::check_node(std::size_t i) const {
  const Node& n = nodes_[i];
  if (!std::isfinite(values_[i])) {
    throw NonFiniteError(op_name(n.op), "value " + std::to_string(values_[i]) + " at node " +
                                            std::to_string(i) + " of " +
                                            std::to_string(nodes_.size()));
  }
  for (std::uint32_t k = n.first; k < n.first + n.count; ++k) {
    if (!std::isfinite(partials_[k])) {
      throw NonFiniteError(op_name(n.op), "local derivative " + std::to_string(partials_[k]) +
                                              " at node " + std::to_string(i));
    }
  }
}

std::vector<double> Tape::gradient(const Var& output) const {
  std::vector<double> result(inputs_.size(), 0.0);
  if (output.is_constant()) return result;
  if (output.tape() != this) throw Error("autodiff: output recorded on a different tape");

  const std::size_t last = output.index();
  for (std::size_t i = 0; i <= last; ++i) check_node(i);

  std::vector<double> adjoint(last + 1, 0.0);
  adjoint[last] = 1.0;
  for (std::size_t i = last + 1; i-- > 0;) {
    const double a = adjoint[i];
    if (a == 0.0) continue;
    const Node& n = nodes_[i];
    for (std::uint32_t k = n.first; k < n.first + n.count; ++k) {
      adjoint[parents_[k]] += a * partials_[k];
    }
  }
  for (std::size_t j = 0; j < inputs_.size(); ++j) {
    if (inputs_[j] <= last) result[j] = adjoint[inputs_[j]];
  }
  return result;
}

Var operator+(const Var& a, const Var& b) {
  Tape* t = shared_tape(a, b);
  const double v = a.value() + b.value();
  return t ? t->record(Op::Add, v, a, 1.0, b, 1.0) : Var(v);
}

Var operator-(const Var& a, const Var& b) {
  Tape* t = shared_tape(a, b);
  const double v = a.value() - b.value();
  return t ? t->record(Op::Sub, v, a, 1.0, b, -1.0) : Var(v);
}

Var operator*(const Var& a, const Var& b) {
  Tape* t = shared_tape(a, b);
  const double v = a.value() * b.value();
  return t ? t->record(Op::Mul, v, a, b.value(), b, a.value()) : Var(v);
}

Var operator/(const Var& a, const Var& b) {
  Tape* t = shared_tape(a, b);
  const double inv = 1.0 / b.value();
  const double v = a.value() * inv;
  return t ? t->record(Op::Div, v, a, inv, b, -v * inv) : Var(v);
}

Var operator-(const Var& a) {
  return a.tape() ? a.tape()->record(Op::Neg, -a.value(), a, -1.0) : Var(-a.value());
}

Var exp(const Var& x) {
  const double v = std::exp(x.value());
  return x.tape() ? x.tape()->record(Op::Exp, v, x, v) : Var(v);
}

Var log(const Var& x) {
  const double v = std::log(x.value());
  return x.tape() ? x.tape()->record(Op::Log, v, x, 1.0 / x.value()) : Var(v);
}

Var sqrt(const Var& x) {
  const double v = std::sqrt(x.value());
  return x.tape() ? x.tape()->record(Op::Sqrt, v, x, 0.5 / v) : Var(v);
}

Var tanh(const Var& x) {
  const double v = std::tanh(x.value());
  return x.tape() ? x.tape()->record(Op::Tanh, v, x, 1.0 - v * v) : Var(v);
}

Var softplus(const Var& x) {
  const double v = vbma::softplus(x.value());
  return x.tape() ? x.tape()->record(Op::Softplus, v, x, vbma::sigmoid(x.value())) : Var(v);
}

Var sigmoid(const Var& x) {
  const double v = vbma::sigmoid(x.value());
  return x.tape() ? x.tape()->record(Op::Sigmoid, v, x, v * (1.0 - v)) : Var(v);
}

Var pow(const Var& x, double exponent) {
  const double v = std::pow(x.value(), exponent);
  if (!x.tape()) return Var(v);
  return x.tape()->record(Op::Pow, v, x, exponent * std::pow(x.value(), exponent - 1.0));
}

Var pow(const Var& x, const Var& exponent) {
  Tape* t = shared_tape(x, exponent);
  const double v = std::pow(x.value(), exponent.value());
  if (!t) return Var(v);
  const double dx = exponent.value() * std::pow(x.value(), exponent.value() - 1.0);
  // d/dy x^y = x^y log x; only defined for x > 0 unless y is constant.
  const double dy = exponent.is_constant() ? 0.0 : v * std::log(x.value());
  return t->record(Op::Pow, v, x, dx, exponent, dy);
}

Var sum(std::span<const Var> terms) {
  Tape* t = nullptr;
  double v = 0.0;
  for (const Var& x : terms) {
    v += x.value();
    if (x.tape()) {
      if (t && t != x.tape()) throw Error("autodiff: operands recorded on different tapes");
      t = x.tape();
    }
  }
  if (!t) return Var(v);
  const std::vector<double> ones(terms.size(), 1.0);
  return t->record(Op::Sum, v, terms, ones);
}

Var dot(std::span<const Var> coef, std::span<const double> x, double offset) {
  if (coef.size() != x.size()) throw DimensionError("dot: length mismatch");
  Tape* t = nullptr;
  double v = offset;
  for (std::size_t i = 0; i < coef.size(); ++i) {
    v += coef[i].value() * x[i];
    if (coef[i].tape()) {
      if (t && t != coef[i].tape()) throw Error("autodiff: operands recorded on different tapes");
      t = coef[i].tape();
    }
  }
  if (!t) return Var(v);
  return t->record(Op::Dot, v, coef, x);
}

}  // namespace vbma::ad
