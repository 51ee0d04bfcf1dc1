#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "vbma/autodiff.hpp"
#include "vbma/ensemble.hpp"
#include "vbma/evidence.hpp"
#include "vbma/models.hpp"
#include "vbma/prediction.hpp"
#include "vbma/vbma.hpp"

namespace {

const std::string kConfigDir = std::string(VBMA_DATA_DIR) + "/../configs/";

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Fit {
  vbma::Ensemble ensemble;
  vbma::EnsembleState state;
  double seconds = 0.0;
  bool simplex_ok = true;

  std::size_t index(const std::string& name) const {
    for (std::size_t m = 0; m < ensemble.models.size(); ++m) {
      if (ensemble.models[m]->name() == name) return m;
    }
    throw vbma::LookupError("no model " + name);
  }
  double q(const std::string& name) const { return state.averaged_weights[index(name)]; }
  std::vector<std::size_t> ranking() const {
    std::vector<std::size_t> r(ensemble.models.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = i;
    std::stable_sort(r.begin(), r.end(), [&](std::size_t a, std::size_t b) {
      return state.averaged_weights[a] > state.averaged_weights[b];
    });
    return r;
  }
  double bf(const std::string& i, const std::string& j) const {
    std::vector<double> prior;
    for (const auto& m : ensemble.models) prior.push_back(m->prior_weight());
    return vbma::bayes_factor(state.averaged_weights, prior, index(i), index(j)).value;
  }
};

Fit fit(const std::string& config, int threads = 1) {
  auto spec = vbma::load_ensemble(kConfigDir + config);
  spec.vbma.threads = threads;
  Fit f;
  f.ensemble = vbma::build_ensemble(spec);
  const auto t0 = std::chrono::steady_clock::now();
  f.state = vbma::run(spec.vbma, f.ensemble.models, [&](const vbma::EnsembleState& s) {
    double sum = 0.0;
    for (double q : s.weights) {
      if (!(q >= 0.0)) f.simplex_ok = false;
      sum += q;
    }
    if (std::abs(sum - 1.0) > 1e-12) f.simplex_ok = false;
  });
  f.seconds = seconds_since(t0);
  return f;
}

std::vector<double> zellner_probabilities(const Fit& f) {
  std::vector<vbma::EvidenceEstimate> ev;
  std::vector<double> prior;
  for (const auto& m : f.ensemble.models) {
    ev.push_back(vbma::zellner_log_evidence(dynamic_cast<const vbma::LinearRegressionModel&>(*m)));
    prior.push_back(m->prior_weight());
  }
  return vbma::evidence_to_posterior(ev, prior);
}

struct Lazy {
  std::unique_ptr<Fit> crime, heart;
  const Fit& get_crime() {
    if (!crime) crime = std::make_unique<Fit>(fit("crime.ini"));
    return *crime;
  }
  const Fit& get_heart() {
    if (!heart) heart = std::make_unique<Fit>(fit("heart.ini"));
    return *heart;
  }
} fits;

const std::vector<std::string> kCrimeTop{"Prob", "Prob+Ed", "M+Prob", "M+Prob+Ed"};
const std::vector<double> kCrimeVbmaReference{0.57, 0.15, 0.11, 0.05};
const std::vector<double> kCrimeMc3Reference{0.58, 0.17, 0.11, 0.07};

bool crime_probabilities() {
  const Fit& f = fits.get_crime();
  const auto r = f.ranking();
  bool ok = true;
  for (std::size_t k = 0; k < 4; ++k) {
    const std::string& name = f.ensemble.models[r[k]]->name();
    const double q = f.state.averaged_weights[r[k]];
    std::printf("  rank %zu: %-10s q=%.4f (reference %s %.2f)\n", k + 1, name.c_str(), q, kCrimeTop[k].c_str(),
                kCrimeVbmaReference[k]);
    if (name != kCrimeTop[k] || std::abs(q - kCrimeVbmaReference[k]) > 0.07) ok = false;
  }
  std::printf("  runtime %.1f s\n", f.seconds);
  return ok;
}

bool exact_oracle_agreement() {
  const Fit& f = fits.get_crime();
  const auto exact = zellner_probabilities(f);
  bool ok = true;
  for (std::size_t k = 0; k < kCrimeTop.size(); ++k) {
    const double p = exact[f.index(kCrimeTop[k])];
    std::printf("  %-10s exact=%.4f reference=%.2f\n", kCrimeTop[k].c_str(), p, kCrimeMc3Reference[k]);
    if (std::abs(p - kCrimeMc3Reference[k]) > 0.01) ok = false;
  }
  double worst = 0.0;
  for (std::size_t m = 0; m < exact.size(); ++m) {
    worst = std::max(worst, std::abs(f.state.averaged_weights[m] - exact[m]));
  }
  std::printf("  max |q - exact| over %zu models = %.4f (tolerance 0.06)\n", exact.size(), worst);
  return ok && worst <= 0.06;
}

bool bayes_factors() {
  const double crime = fits.get_crime().bf("Prob+Ed", "M+Prob+Ed");
  const double heart = fits.get_heart().bf("rest_bp+sex+age+max_hr", "cholesterol+rest_bp+sex+age+max_hr");
  std::printf("  crime Prob+Ed vs M+Prob+Ed: %.3f (range [2.0, 4.0], reference 3.00)\n", crime);
  std::printf("  heart rest_bp+sex+age+max_hr vs full: %.3f (range [0.10, 0.35], reference 0.21)\n", heart);
  return crime >= 2.0 && crime <= 4.0 && crime > 1.0 && heart >= 0.10 && heart <= 0.35 && heart < 1.0;
}

bool logistic_ensemble() {
  const Fit& f = fits.get_heart();
  const auto r = f.ranking();
  for (std::size_t k = 0; k < 3; ++k) {
    std::printf("  rank %zu: %-36s q=%.4f\n", k + 1, f.ensemble.models[r[k]]->name().c_str(),
                f.state.averaged_weights[r[k]]);
  }
  std::printf("  runtime %.1f s\n", f.seconds);
  const double top = f.state.averaged_weights[r[0]];
  return f.ensemble.models[r[0]]->name() == "cholesterol+rest_bp+sex+max_hr" && std::abs(top - 0.43) <= 0.10 &&
         f.ensemble.models[r[1]]->name() == "cholesterol+rest_bp+sex+age+max_hr";
}

const std::vector<double> kData{1.2, 0.7, 1.9, 1.1, 0.4, 1.6, 0.9, 1.3};
constexpr double kNoise = 0.8, kPriorMean = 0.0, kPriorSd = 2.0;

bool conjugate_recovery() {
  auto m = std::make_shared<vbma::NormalMeanModel>("nm", kData, kNoise, kPriorMean, kPriorSd);
  m->set_prior_weight(1.0);
  vbma::VbmaConfig c;
  c.samples = 10;
  c.pretrain_iters = 1000;
  c.joint_iters = 500;
  c.window = 300;
  c.convergence_window = 0;
  c.optimizer.step_size = 0.02;
  const auto st = vbma::run(c, {m});
  const oracle::NormalMean exact{kData, kNoise, kPriorMean, kPriorSd};
  const auto& q = st.averaged_variational[0];
  const auto& tr = st.elbo_trace[0];
  double elbo = 0.0;
  for (std::size_t i = tr.size() - 300; i < tr.size(); ++i) elbo += tr[i] / 300.0;
  const double dm = std::abs(q.location[0] - exact.posterior_mean());
  const double ds = std::abs(q.sd(0) - std::sqrt(exact.posterior_variance()));
  const double de = std::abs(elbo - exact.log_evidence());
  std::printf("  |mean error| %.2e, |sd error| %.2e, |L - log evidence| %.4f nats\n", dm, ds, de);
  return dm <= 1e-2 && ds <= 1e-2 && de <= 0.05;
}

bool gradient_unbiasedness() {
  const vbma::NormalMeanModel m("nm", kData, kNoise, kPriorMean, kPriorSd);
  const double mu = 0.2, var = 0.6;
  vbma::VariationalState s(m.layout());
  s.location[0] = mu;
  s.raw_scale[0] = vbma::encode_scale(var);
  vbma::Rng rng = vbma::substream(7, 1);
  const int n = 10000;
  std::vector<double> sum(2, 0.0), sum_sq(2, 0.0);
  for (int i = 0; i < n; ++i) {
    std::vector<std::vector<double>> z(1, std::vector<double>(1));
    vbma::fill_standard_normal(rng, z[0]);
    const auto est = vbma::estimate_grad_and_elbo(m, s, z);
    for (int j = 0; j < 2; ++j) {
      sum[j] += est.gradient[j] / n;
      sum_sq[j] += est.gradient[j] * est.gradient[j] / n;
    }
  }
  const oracle::NormalMean exact{kData, kNoise, kPriorMean, kPriorSd};
  const auto fd = oracle::fd_gradient(
      [&](const std::vector<double>& l) { return exact.elbo(l[0], std::log1p(std::exp(l[1]))); },
      {mu, s.raw_scale[0]}, 1e-6);
  bool ok = true;
  for (int j = 0; j < 2; ++j) {
    const double rel = std::abs(sum[j] - fd[j]) / std::abs(fd[j]);
    const double se = std::sqrt((sum_sq[j] - sum[j] * sum[j]) / n);
    std::printf("  coordinate %d: mean G %.5f (se %.5f), finite difference %.5f, relative gap %.4f\n", j, sum[j], se,
                fd[j], rel);
    if (rel > 0.02) ok = false;
  }
  return ok;
}

bool gp_study() {
  const Fit f = fit("gp.ini");
  const auto& e = f.ensemble;
  const double q = f.state.averaged_weights[0];
  const vbma::BmaPosterior post{e.models, f.state.averaged_variational, f.state.averaged_weights};
  const Eigen::VectorXd mean = vbma::mixture_mean(e.models, post.weights, post.sampler(), e.test.x, 200, 5);

  const vbma::SynthGpOptions truth;
  oracle::Matrix xtr, xte;
  for (Eigen::Index i = 0; i < e.train.rows(); ++i) xtr.push_back({e.train.x(i, 0), e.train.x(i, 1)});
  for (Eigen::Index i = 0; i < e.test.rows(); ++i) xte.push_back({e.test.x(i, 0), e.test.x(i, 1)});
  const std::vector<double> ytr(e.train.y.data(), e.train.y.data() + e.train.y.size());
  const std::vector<double> exact =
      oracle::gp_predictive_mean(xtr, ytr, truth.beta, truth.eta, truth.nu1, truth.nu2, truth.sigma, xte);

  double se_v = 0.0, se_o = 0.0;
  for (Eigen::Index i = 0; i < e.test.rows(); ++i) {
    se_v += (mean(i) - e.test.y(i)) * (mean(i) - e.test.y(i));
    se_o += (exact[i] - e.test.y(i)) * (exact[i] - e.test.y(i));
  }
  const double rmse_v = std::sqrt(se_v / e.test.rows()), rmse_o = std::sqrt(se_o / e.test.rows());
  std::printf("  q(%s) = %.4f, n_train = %lld\n", e.models[0]->name().c_str(), q,
              static_cast<long long>(e.train.rows()));
  std::printf("  RMSE vbma %.4f, exact-hyperparameter GP %.4f, ratio %.4f\n", rmse_v, rmse_o, rmse_v / rmse_o);
  std::printf("  runtime %.1f s\n", f.seconds);
  return q > 0.9 && std::abs(rmse_v / rmse_o - 1.0) <= 0.05;
}

double fd_gap(const vbma::Model& m, const std::vector<double>& theta) {
  const auto r = vbma::ad::grad([&](std::span<const vbma::ad::Var> v) { return m.log_joint(v); }, theta);
  const auto fd = oracle::fd_gradient([&](const std::vector<double>& t) { return m.log_joint(t); }, theta, 1e-6);
  double gap = 0.0, scale = 1.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    gap = std::max(gap, std::abs(r.gradient[i] - fd[i]));
    scale = std::max(scale, std::abs(fd[i]));
  }
  return gap / scale;
}

bool property_suites() {
  bool all = true;
  auto report = [&](const char* name, bool ok) {
    std::printf("  %-44s %s\n", name, ok ? "ok" : "violated");
    all = all && ok;
  };

  const Fit& crime = fits.get_crime();
  report("simplex invariant of q at every iteration", crime.simplex_ok && fits.get_heart().simplex_ok);

  {
    const std::vector<double> l{-3.2, 0.4, 1.7, -0.1}, lp(4, std::log(0.25));
    const auto a = vbma::update_weights(l, lp);
    bool ok = true;
    for (double c : {-1e6, -5.0, 3.0, 1e6}) {
      std::vector<double> shifted(l);
      for (double& v : shifted) v += c;
      const auto b = vbma::update_weights(shifted, lp);
      for (std::size_t i = 0; i < a.size(); ++i) ok = ok && std::abs(a[i] - b[i]) <= 1e-9;
    }
    report("softmax shift invariance", ok);
  }

  {
    bool ok = true;
    for (std::size_t m = 0; m < crime.ensemble.models.size(); ++m) {
      const auto& tr = crime.state.elbo_trace[m];
      const std::size_t w = 100;
      double sum = 0.0, sum_sq = 0.0;
      for (std::size_t i = tr.size() - w; i < tr.size(); ++i) {
        sum += tr[i];
        sum_sq += tr[i] * tr[i];
      }
      const double mean = sum / w, se = std::sqrt(std::max(0.0, sum_sq / w - mean * mean) / w);
      const auto& lm = dynamic_cast<const vbma::LinearRegressionModel&>(*crime.ensemble.models[m]);
      ok = ok && mean <= vbma::zellner_log_evidence(lm).log_evidence + 3.0 * se;
    }
    report("ELBO <= log evidence + 3se (conjugate models)", ok);
  }

  {
    const auto& q = crime.state.averaged_weights;
    std::vector<double> prior(q.size(), 1.0 / q.size());
    bool ok = true;
    for (std::size_t i = 0; i < q.size(); ++i) {
      for (std::size_t j = 0; j < q.size(); ++j) {
        for (std::size_t k = 0; k < q.size(); ++k) {
          const double ij = vbma::bayes_factor(q, prior, i, j).value, jk = vbma::bayes_factor(q, prior, j, k).value;
          const double ik = vbma::bayes_factor(q, prior, i, k).value;
          ok = ok && std::abs(ij * jk / ik - 1.0) <= 1e-12;
        }
      }
    }
    report("Bayes-factor multiplicativity", ok);
  }

  {
    const Fit again = fit("crime.ini", 3);
    report("seeded bitwise determinism (1 vs 3 threads)",
           vbma::checkpoint_text(again.state) == vbma::checkpoint_text(crime.state));
  }

  {
    bool ok = true;
    const int n = 10000;
    for (const auto fam : {vbma::Family::Normal, vbma::Family::LogNormal}) {
      vbma::VariationalState s(vbma::ParamLayout{{"t", fam}});
      s.location[0] = 0.4;
      s.raw_scale[0] = vbma::encode_scale(0.3);
      vbma::Rng rng = vbma::substream(11, static_cast<std::uint64_t>(fam));
      std::vector<double> sample;
      for (int i = 0; i < n; ++i) {
        std::vector<double> z(1);
        vbma::fill_standard_normal(rng, z);
        sample.push_back(vbma::reparam_sample(s, z)[0]);
      }
      const double sd = std::sqrt(0.3);
      const double d = oracle::ks_statistic(sample, [&](double x) {
        if (fam == vbma::Family::LogNormal) return x > 0.0 ? oracle::normal_cdf((std::log(x) - 0.4) / sd) : 0.0;
        return oracle::normal_cdf((x - 0.4) / sd);
      });
      ok = ok && d < oracle::ks_critical_001(n);
    }
    report("KS tests for reparametrized samples", ok);
  }

  {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01(0.0, 0.5);
    double worst = 0.0;
    std::vector<const vbma::Model*> models;
    for (const auto& m : crime.ensemble.models) models.push_back(m.get());
    for (const auto& m : fits.get_heart().ensemble.models) models.push_back(m.get());
    const vbma::NormalMeanModel nm("nm", kData, kNoise, kPriorMean, kPriorSd);
    models.push_back(&nm);
    Eigen::MatrixXd xg(12, 2);
    Eigen::VectorXd yg(12);
    for (int i = 0; i < 12; ++i) {
      xg(i, 0) = i % 4;
      xg(i, 1) = i / 4;
      yg(i) = std::sin(0.7 * i);
    }
    const vbma::GaussianProcessModel gp("gp", xg, yg, 0.0);
    models.push_back(&gp);
    for (const vbma::Model* m : models) {
      std::vector<double> theta(m->dimension());
      const auto layout = m->layout();
      for (std::size_t i = 0; i < theta.size(); ++i) {
        theta[i] = layout[i].family == vbma::Family::LogNormal ? std::exp(n01(rng)) : n01(rng);
      }
      worst = std::max(worst, fd_gap(*m, theta));
    }
    std::printf("  finite-difference gap over %zu models: %.2e\n", models.size(), worst);
    report("finite differences for every model log-joint", worst < 1e-5);
  }
  return all;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<bool()>>> criteria{
      {"1 crime model probabilities", crime_probabilities},
      {"2 exact-oracle agreement", exact_oracle_agreement},
      {"3 Bayes factors", bayes_factors},
      {"4 logistic ensemble", logistic_ensemble},
      {"5 conjugate recovery", conjugate_recovery},
      {"6 gradient unbiasedness", gradient_unbiasedness},
      {"7 GP study", gp_study},
      {"8 property suites", property_suites},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    bool ok = false;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      ok = check();
    } catch (const std::exception& e) {
      std::printf("  error: %s\n", e.what());
    }
    std::printf("%s: criterion %s (%.1f s)\n", ok ? "PASS" : "FAIL", name, seconds_since(t0));
    std::fflush(stdout);
    if (!ok) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
