#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vbma/autodiff.hpp"
#include "vbma/errors.hpp"
#include "vbma/gp.hpp"
#include "vbma/models.hpp"

namespace {

using vbma::ad::Var;
using Span = std::span<const Var>;

TEST(Autodiff, SquareAtThree) {
  const std::vector<double> x{3.0};
  const auto r = vbma::ad::grad([](Span v) { return v[0] * v[0]; }, x);
  EXPECT_DOUBLE_EQ(r.value, 9.0);
  ASSERT_EQ(r.gradient.size(), 1u);
  EXPECT_DOUBLE_EQ(r.gradient[0], 6.0);
}

TEST(Autodiff, LogPlusLinear) {
  const std::vector<double> x{1.0, 5.0};
  const auto r = vbma::ad::grad([](Span v) { return log(v[0]) + v[1]; }, x);
  EXPECT_DOUBLE_EQ(r.value, 5.0);
  EXPECT_DOUBLE_EQ(r.gradient[0], 1.0);
  EXPECT_DOUBLE_EQ(r.gradient[1], 1.0);
}

TEST(Autodiff, ConstantExpressionHasZeroGradient) {
  const std::vector<double> x{0.3, -2.0};
  const auto r = vbma::ad::grad([](Span) { return Var(2.0) * exp(Var(1.5)) + 4.0; }, x);
  EXPECT_DOUBLE_EQ(r.value, 2.0 * std::exp(1.5) + 4.0);
  EXPECT_EQ(r.gradient, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(vbma::ad::finite_diff_check([](Span) { return Var(7.0); }, x, 1e-5), 0.0);
}

TEST(Autodiff, EveryElementaryOpMatchesCentralDifferences) {
  const auto f = [](Span v) {
    const Var a = v[0], b = v[1], c = v[2];
    return a * b - c / b + exp(a * 0.3) + log(c) + sqrt(c + 1.0) + tanh(a - b) + softplus(b) +
           sigmoid(c - a) + pow(c, 1.7) + pow(c, a) - (-a) + vbma::ad::log_sigmoid(b) +
           vbma::ad::sum(std::vector<Var>{a, b, c}) +
           vbma::ad::dot(std::vector<Var>{a, b, c}, std::vector<double>{0.5, -1.0, 2.0}, 0.25);
  };
  const std::vector<double> x{0.4, 1.3, 2.1};
  const auto r = vbma::ad::grad(f, x);
  const auto fd = oracle::fd_gradient([&](const std::vector<double>& p) { return vbma::ad::evaluate(f, p); }, x, 1e-6);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(r.gradient[i], fd[i], 1e-7 * (1.0 + std::abs(fd[i])));
}

TEST(Autodiff, FiniteDiffCheckOnSquare) {
  const std::vector<double> x{3.0};
  EXPECT_LT(vbma::ad::finite_diff_check([](Span v) { return v[0] * v[0]; }, x, 1e-5), 1e-8);
}

TEST(Autodiff, FiniteDiffCheckRejectsNonPositiveStep) {
  const std::vector<double> x{1.0};
  EXPECT_THROW(vbma::ad::finite_diff_check([](Span v) { return v[0]; }, x, 0.0), vbma::DomainError);
}

TEST(Autodiff, LogisticLikelihoodAtZeroMatchesCentralDifferences) {
  Eigen::MatrixXd x(5, 2);
  x << 0.5, -1.0, 1.5, 0.2, -0.3, 0.8, 2.0, -1.2, -0.7, 0.4;
  Eigen::VectorXd y(5);
  y << 1, 0, 1, 1, 0;
  const vbma::LogisticRegressionModel model("m", x, y, {0, 1}, {"a", "b"});
  const std::vector<double> beta(3, 0.0);
  const auto r = vbma::ad::grad([&](Span v) { return model.log_likelihood(v); }, beta);
  const auto fd = oracle::fd_gradient([&](const std::vector<double>& p) { return model.log_likelihood(p); }, beta, 1e-5);
  for (std::size_t i = 0; i < beta.size(); ++i) {
    EXPECT_LT(std::abs(r.gradient[i] - fd[i]) / std::max(std::abs(fd[i]), 1e-12), 1e-6);
  }
}

TEST(Autodiff, GpLogMarginalFiniteDiffCheck) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 6.0);
  Eigen::MatrixXd x(10, 2);
  Eigen::VectorXd y(10);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = u(rng);
    x(i, 1) = u(rng);
    y(i) = std::sin(x(i, 0)) + 0.3 * x(i, 1);
  }
  const vbma::GaussianProcessModel model("gp", x, y);
  const std::vector<double> theta{0.2, 1.1, 1.7, 2.3, 0.4};
  EXPECT_LT(vbma::ad::finite_diff_check([&](Span v) { return model.log_likelihood(v); }, theta, 1e-5), 1e-4);
}

TEST(Autodiff, GradientIsLinear) {
  const auto f = [](Span v) { return v[0] * v[1] + exp(v[1]); };
  const auto g = [](Span v) { return log(v[0]) * tanh(v[1]); };
  const double a = 2.5, b = -0.75;
  const std::vector<double> x{1.3, 0.6};
  const auto rf = vbma::ad::grad(f, x), rg = vbma::ad::grad(g, x);
  const auto rh = vbma::ad::grad([&](Span v) { return a * f(v) + b * g(v); }, x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(rh.gradient[i], a * rf.gradient[i] + b * rg.gradient[i], 1e-12);
  }
}

TEST(Autodiff, NonFiniteValueNamesTheOperation) {
  const std::vector<double> x{-1.0};
  try {
    vbma::ad::grad([](Span v) { return log(v[0]) + 1.0; }, x);
    FAIL() << "expected NonFiniteError";
  } catch (const vbma::NonFiniteError& e) {
    EXPECT_EQ(e.operation(), "log");
  }
}

TEST(Autodiff, DivisionByZeroIsReported) {
  const std::vector<double> x{0.0};
  EXPECT_THROW(vbma::ad::grad([](Span v) { return 1.0 / v[0]; }, x), vbma::NonFiniteError);
}

TEST(Autodiff, MixingTapesIsRejected) {
  vbma::ad::Tape t1, t2;
  const Var a = t1.input(1.0), b = t2.input(2.0);
  EXPECT_THROW((void)(a + b), vbma::Error);
}

TEST(Autodiff, TapeReportsInputCount) {
  vbma::ad::Tape tape;
  const std::vector<double> x{1.0, 2.0, 3.0};
  const auto in = tape.inputs(x);
  const Var y = in[0] * in[1] + in[2];
  EXPECT_EQ(tape.input_count(), 3u);
  EXPECT_EQ(tape.gradient(y).size(), 3u);
}

}  // namespace
