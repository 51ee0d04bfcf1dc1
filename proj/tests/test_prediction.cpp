#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vbma/ensemble.hpp"
#include "vbma/errors.hpp"
#include "vbma/models.hpp"
#include "vbma/prediction.hpp"
#include "vbma/vbma.hpp"

namespace {

const std::string kConfigDir = std::string(VBMA_DATA_DIR) + "/../configs/";

// --- quantiles and intervals ----------------------------------------------------

TEST(Quantile, OrderStatisticsOfOneToHundred) {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  std::shuffle(v.begin(), v.end(), std::mt19937_64(1));
  EXPECT_DOUBLE_EQ(vbma::quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(vbma::quantile(v, 1.0), 100.0);
  EXPECT_DOUBLE_EQ(vbma::quantile(v, 0.5), 50.5);
  const auto [lo, hi] = vbma::equal_tail_interval(v, 0.2);
  EXPECT_DOUBLE_EQ(lo, vbma::quantile(v, 0.1));
  EXPECT_DOUBLE_EQ(hi, vbma::quantile(v, 0.9));
  EXPECT_NEAR(lo, 10.9, 1e-12);
  EXPECT_NEAR(hi, 90.1, 1e-12);
}

TEST(Quantile, InvalidInputs) {
  EXPECT_THROW(vbma::quantile({}, 0.5), vbma::DomainError);
  EXPECT_THROW(vbma::quantile({1.0, 2.0}, 1.5), vbma::DomainError);
}

TEST(Interval, SymmetricDrawsGiveSymmetricInterval) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n01;
  std::vector<double> d;
  for (int i = 0; i < 5000; ++i) {
    const double v = n01(rng);
    d.push_back(v);
    d.push_back(-v);
  }
  for (double a : {0.1, 0.5, 0.9}) {
    const auto [lo, hi] = vbma::equal_tail_interval(d, a);
    EXPECT_NEAR(lo, -hi, 1e-12);
  }
}

TEST(Interval, StandardNormalNinetyPercent) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  std::vector<double> d(100000);
  for (double& v : d) v = n01(rng);
  const auto [lo, hi] = vbma::equal_tail_interval(d, 0.1);
  const double z = oracle::normal_quantile(0.95);
  EXPECT_NEAR(lo, -z, 0.02);
  EXPECT_NEAR(hi, z, 0.02);
}

// --- coverage -------------------------------------------------------------------

TEST(Coverage, NondecreasingInLevel) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd draws(50, 400);
  Eigen::VectorXd truth(50);
  for (int i = 0; i < 50; ++i) {
    truth(i) = 1.5 * n01(rng);
    for (int d = 0; d < 400; ++d) draws(i, d) = n01(rng);
  }
  const auto levels = vbma::default_levels();
  ASSERT_EQ(levels.size(), 9u);
  EXPECT_NEAR(levels.front(), 0.1, 1e-12);
  EXPECT_NEAR(levels.back(), 0.9, 1e-12);
  const auto c = vbma::coverage_curve(draws, truth, levels);
  for (std::size_t k = 1; k < c.size(); ++k) EXPECT_GE(c[k], c[k - 1]);
}

TEST(Coverage, CalibratedModelIsNearDiagonal) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  const int n = 500, draws_per_point = 2000;
  Eigen::MatrixXd draws(n, draws_per_point);
  Eigen::VectorXd truth(n);
  for (int i = 0; i < n; ++i) {
    const double mean = 3.0 * n01(rng), sd = std::exp(0.5 * n01(rng));
    truth(i) = mean + sd * n01(rng);
    for (int d = 0; d < draws_per_point; ++d) draws(i, d) = mean + sd * n01(rng);
  }
  const auto levels = vbma::default_levels();
  const auto c = vbma::coverage_curve(draws, truth, levels);
  for (std::size_t k = 0; k < levels.size(); ++k) EXPECT_NEAR(c[k], levels[k], 0.06) << levels[k];
}

// --- Bayes factors --------------------------------------------------------------

TEST(BayesFactor, EqualToPriorGivesOne) {
  const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(vbma::bayes_factor(p, p, i, j).value, 1.0, 1e-15);
  }
}

TEST(BayesFactor, Multiplicative) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> q(5), p(5);
    for (int m = 0; m < 5; ++m) {
      q[m] = u(rng);
      p[m] = u(rng);
    }
    const double ij = vbma::bayes_factor(q, p, 0, 2).value;
    const double jk = vbma::bayes_factor(q, p, 2, 4).value;
    const double ik = vbma::bayes_factor(q, p, 0, 4).value;
    EXPECT_NEAR(ij * jk / ik, 1.0, 1e-12);
  }
}

TEST(BayesFactor, ZeroDenominatorIsFlagged) {
  const std::vector<double> q{0.6, 0.0, 0.4}, p{1.0 / 3, 1.0 / 3, 1.0 / 3};
  const auto bf = vbma::bayes_factor(q, p, 0, 1);
  EXPECT_TRUE(bf.infinite);
  EXPECT_TRUE(std::isinf(bf.value));
  const std::vector<double> q0{1.0, 0.0, 0.0};
  EXPECT_TRUE(vbma::bayes_factor(q0, p, 1, 2).undefined);
  EXPECT_NEAR(vbma::bayes_factor(q, p, 2, 0).value, 2.0 / 3.0, 1e-15);
}

// --- mixtures -------------------------------------------------------------------

std::shared_ptr<vbma::NormalMeanModel> point_model(const std::string& name) {
  return std::make_shared<vbma::NormalMeanModel>(name, std::vector<double>{}, 1.0, 0.0, 1.0);
}

TEST(Mixture, PointMassesAtZeroAndOne) {
  const std::vector<vbma::ModelPtr> models{point_model("zero"), point_model("one")};
  const std::vector<double> q{0.3, 0.7};
  const vbma::ThetaSampler sampler = [](std::size_t m, vbma::Rng&) { return std::vector<double>{double(m)}; };
  const Eigen::MatrixXd pt = Eigen::MatrixXd::Zero(1, 1);
  const int n = 10000;
  const Eigen::MatrixXd d = vbma::mixture_draw(models, q, sampler, pt, n, 12, false);
  ASSERT_EQ(d.cols(), n);
  for (int i = 0; i < n; ++i) EXPECT_TRUE(d(0, i) == 0.0 || d(0, i) == 1.0);
  EXPECT_LT(std::abs(d.mean() - 0.7), 3.0 * std::sqrt(0.21 / n));
}

TEST(Mixture, ZeroWeightComponentIsNeverDrawn) {
  vbma::Rng rng = vbma::substream(13, 0);
  const std::vector<double> q{0.0, 0.5, 0.0, 0.5};
  for (int i = 0; i < 2000; ++i) {
    const auto m = vbma::draw_component(q, rng);
    EXPECT_TRUE(m == 1 || m == 3);
  }
}

TEST(Mixture, SingleComponentMatchesModelPredictive) {
  auto m = std::make_shared<vbma::NormalMeanModel>("nm", std::vector<double>{0.2, 0.9}, 0.7, 0.0, 1.0);
  vbma::VariationalState s(m->layout());
  s.location[0] = 0.4;
  s.raw_scale[0] = vbma::encode_scale(0.3);
  vbma::BmaPosterior post{{m}, {s}, {1.0}};
  const Eigen::MatrixXd pt = Eigen::MatrixXd::Zero(1, 1);
  const int n = 10000;
  const Eigen::MatrixXd mix = vbma::bma_draw(post, pt, n, 14, true);
  std::vector<double> a(mix.data(), mix.data() + n), b;
  vbma::Rng rng = vbma::substream(15, 0);
  for (int i = 0; i < n; ++i) {
    std::vector<double> z(1);
    vbma::fill_standard_normal(rng, z);
    b.push_back(m->predictive_draw(vbma::reparam_sample(s, z), pt, true, rng)[0]);
  }
  EXPECT_LT(oracle::ks_two_sample(a, b), oracle::ks_critical_001(n, n));
}

TEST(Mixture, DrawsDoNotDependOnThreads) {
  const std::vector<vbma::ModelPtr> models{point_model("a"), point_model("b")};
  vbma::BmaPosterior post{models, {vbma::VariationalState(models[0]->layout(), 0.5), vbma::VariationalState(models[1]->layout(), 2.0)}, {0.4, 0.6}};
  const Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(3, 1);
  EXPECT_EQ(vbma::bma_draw(post, pts, 500, 16, true, 1), vbma::bma_draw(post, pts, 500, 16, true, 4));
}

struct CrimeFit {
  vbma::Ensemble ensemble;
  vbma::BmaPosterior posterior;
};

const CrimeFit& crime_fit(const std::string& config) {
  static std::map<std::string, CrimeFit> cache;
  auto it = cache.find(config);
  if (it != cache.end()) return it->second;
  const auto spec = vbma::load_ensemble(kConfigDir + config);
  auto e = vbma::build_ensemble(spec);
  const auto st = vbma::run(spec.vbma, e.models);
  CrimeFit fit{e, {e.models, st.averaged_variational, st.averaged_weights}};
  return cache.emplace(config, std::move(fit)).first->second;
}

TEST(Mixture, HeldOutDensityDecomposesIntoComponents) {
  const auto& fit = crime_fit("crime_split.ini");
  const auto& test = fit.ensemble.test;
  ASSERT_GT(test.rows(), 0);
  const Eigen::MatrixXd pt = test.x.topRows(1);
  const int n = 100000;
  const auto& models = fit.posterior.models;
  const auto& q = fit.posterior.weights;
  const auto sampler = fit.posterior.sampler();
  const Eigen::MatrixXd mix = vbma::mixture_draw(models, q, sampler, pt, n, 17, true);

  const double lo = mix.minCoeff(), hi = mix.maxCoeff();
  const int bins = 50;
  auto bin_of = [&](double v) { return std::clamp(static_cast<int>((v - lo) / (hi - lo) * bins), 0, bins - 1); };
  std::vector<double> h_mix(bins, 0.0), h_sum(bins, 0.0);
  for (int i = 0; i < n; ++i) h_mix[bin_of(mix(0, i))] += 1.0 / n;
  for (std::size_t m = 0; m < models.size(); ++m) {
    if (q[m] < 1e-4) continue;
    std::vector<double> one_hot(models.size(), 0.0);
    one_hot[m] = 1.0;
    const Eigen::MatrixXd comp = vbma::mixture_draw(models, one_hot, sampler, pt, n, 100 + m, true);
    for (int i = 0; i < n; ++i) h_sum[bin_of(comp(0, i))] += q[m] / n;
  }
  double tv = 0.0;
  for (int b = 0; b < bins; ++b) tv += 0.5 * std::abs(h_mix[b] - h_sum[b]);
  EXPECT_LT(tv, 0.05);
}

// --- coefficient summaries ----------------------------------------------------------

TEST(Coefficients, InclusionProbabilities) {
  const auto& fit = crime_fit("crime.ini");
  const auto& post = fit.posterior;
  for (const std::string& name : {"M", "Prob", "Ed"}) {
    const auto s = vbma::coefficient_summary(post, name, 4000);
    double excluded = 0.0;
    for (std::size_t m = 0; m < post.models.size(); ++m) {
      if (post.models[m]->find_parameter("beta[" + name + "]") == vbma::Model::npos) excluded += post.weights[m];
    }
    EXPECT_GE(s.inclusion_probability, 0.0);
    EXPECT_LE(s.inclusion_probability, 1.0);
    EXPECT_NEAR(s.inclusion_probability + excluded, 1.0, 1e-12) << name;
    const auto scaled = s.scaled_density();
    EXPECT_NEAR(*std::max_element(scaled.begin(), scaled.end()), s.inclusion_probability, 1e-12);
    EXPECT_GT(s.bandwidth, 0.0);
  }
  EXPECT_GE(vbma::coefficient_summary(post, "Prob", 4000).inclusion_probability, 0.88);
  EXPECT_THROW(vbma::coefficient_summary(post, "Po1"), vbma::LookupError);
}

TEST(Coefficients, PresentInEveryModel) {
  const auto& fit = crime_fit("crime.ini");
  vbma::BmaPosterior sub;
  for (std::size_t m = 0; m < fit.posterior.models.size(); ++m) {
    if (fit.posterior.models[m]->find_parameter("beta[Ed]") == vbma::Model::npos) continue;
    sub.models.push_back(fit.posterior.models[m]);
    sub.states.push_back(fit.posterior.states[m]);
    sub.weights.push_back(0.25);
  }
  ASSERT_EQ(sub.models.size(), 4u);
  const auto s = vbma::coefficient_summary(sub, "Ed", 4000);
  EXPECT_DOUBLE_EQ(s.inclusion_probability, 1.0);
  // KDE integrates to one over the grid.
  double area = 0.0;
  for (std::size_t i = 1; i < s.grid.size(); ++i) area += 0.5 * (s.density[i] + s.density[i - 1]) * (s.grid[i] - s.grid[i - 1]);
  EXPECT_NEAR(area, 1.0, 0.01);
}

// --- rmse -----------------------------------------------------------------------------

TEST(Rmse, Examples) {
  const std::vector<double> t{1.0, -2.0, 3.5, 0.0};
  EXPECT_EQ(vbma::rmse(t, t), 0.0);
  std::vector<double> shifted = t;
  for (double& v : shifted) v -= 0.75;
  EXPECT_NEAR(vbma::rmse(shifted, t), 0.75, 1e-15);
  EXPECT_THROW(vbma::rmse(std::vector<double>{1.0}, t), vbma::DimensionError);
}

}  // namespace
