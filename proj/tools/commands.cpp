#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "svg.hpp"
#include "vbma/ensemble.hpp"
#include "vbma/errors.hpp"
#include "vbma/evidence.hpp"
#include "vbma/prediction.hpp"
#include "vbma/text.hpp"
#include "vbma/vbma.hpp"

namespace vbma::cli {

namespace fs = std::filesystem;
using text::format_double;

namespace {

struct Context {
  EnsembleSpec spec;
  std::string hash;
  fs::path out;
};

// Everything that changes results. Threads are excluded: output does not depend on them.
std::string settings_text(const VbmaConfig& c) {
  std::ostringstream s;
  s << "samples=" << c.samples << ";pretrain=" << c.pretrain_iters << ";joint=" << c.joint_iters
    << ";window=" << c.window << ";seed=" << c.seed << ";optimizer=" << optimizer_name(c.optimizer.kind)
    << ";step=" << format_double(c.optimizer.step_size) << ";beta1=" << format_double(c.optimizer.beta1)
    << ";beta2=" << format_double(c.optimizer.beta2) << ";eps=" << format_double(c.optimizer.eps)
    << ";var0=" << format_double(c.initial_variance) << ";tol=" << format_double(c.tolerance)
    << ";cw=" << c.convergence_window;
  return s.str();
}

Context resolve(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config is required");
  Context ctx;
  ctx.spec = load_ensemble(o.config);
  VbmaConfig& c = ctx.spec.vbma;
  if (o.optimizer) {
    const OptimizerKind kind = parse_optimizer(*o.optimizer);
    if (kind != c.optimizer.kind) {
      c.optimizer = kind == OptimizerKind::RmsProp ? OptimizerSettings::rmsprop() : OptimizerSettings::adam();
      c.optimizer.kind = kind;
    }
  }
  if (o.step_size) c.optimizer.step_size = *o.step_size;
  c.optimizer.schedule.a = c.optimizer.step_size;
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (o.samples) c.samples = *o.samples;
  if (o.pretrain_iters) c.pretrain_iters = *o.pretrain_iters;
  if (o.joint_iters) c.joint_iters = *o.joint_iters;
  if (o.window) c.window = *o.window;
  c.validate();
  ctx.hash = text::fingerprint(ctx.spec.text + "\n" + settings_text(c));
  ctx.out = o.out;
  return ctx;
}

std::string header(const Context& ctx, const std::string& status) {
  return std::string("# vbma version=") + VBMA_VERSION + " seed=" + std::to_string(ctx.spec.vbma.seed) +
         " config=" + ctx.hash + " status=" + status + "\n";
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw ConfigError("failed writing '" + path.string() + "'");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory '" + dir.string() + "'");
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

std::vector<double> prior_weights(const std::vector<ModelPtr>& models) {
  std::vector<double> p;
  for (const auto& m : models) p.push_back(m->prior_weight());
  return p;
}

std::vector<std::size_t> order_by(const std::vector<double>& w) {
  std::vector<std::size_t> idx(w.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
  return idx;
}

BmaPosterior load_posterior(const Context& ctx, const Ensemble& e) {
  const fs::path path = ctx.out / "checkpoint.txt";
  if (!fs::exists(path)) {
    throw ConfigError("no fit artifacts in '" + ctx.out.string() + "': run `vbma fit --config " +
                      "<file> --out " + ctx.out.string() + "` first");
  }
  const std::string text = read_file(path);
  if (text.find("config=" + ctx.hash) == std::string::npos) {
    std::cerr << "vbma: warning: " << path.string()
              << " was written with a different configuration or overrides\n";
  }
  const Checkpoint c = parse_checkpoint(text);
  if (c.names.size() != e.models.size()) {
    throw ConfigError("checkpoint has " + std::to_string(c.names.size()) + " models but the ensemble has " +
                      std::to_string(e.models.size()) + "; re-run fit");
  }
  for (std::size_t m = 0; m < e.models.size(); ++m) {
    if (c.names[m] != e.models[m]->name() || c.averaged_variational[m].size() != e.models[m]->dimension()) {
      throw ConfigError("checkpoint model '" + c.names[m] + "' does not match the ensemble; re-run fit");
    }
  }
  BmaPosterior post{e.models, c.averaged_variational, c.averaged_weights};
  double total = 0.0;
  for (double w : post.weights) total += w;
  for (double& w : post.weights) w /= total;
  post.validate();
  return post;
}

struct Oracle {
  std::vector<double> weights;
  std::vector<ZellnerPosterior> posteriors;
  std::vector<EvidenceEstimate> evidence;
  ThetaSampler sampler() const {
    return [this](std::size_t m, Rng& rng) { return posteriors[m].sample(rng); };
  }
};

std::optional<Oracle> zellner_oracle(const Ensemble& e) {
  Oracle o;
  for (const auto& m : e.models) {
    const auto* lin = dynamic_cast<const LinearRegressionModel*>(m.get());
    if (!lin) return std::nullopt;
    o.evidence.push_back(zellner_log_evidence(*lin));
    o.posteriors.emplace_back(*lin);
  }
  o.weights = evidence_to_posterior(o.evidence, prior_weights(e.models));
  return o;
}

std::size_t find_model(const Ensemble& e, const std::string& name) {
  for (std::size_t m = 0; m < e.models.size(); ++m) {
    if (e.models[m]->name() == name) return m;
  }
  std::string names;
  for (const auto& m : e.models) names += (names.empty() ? "" : ", ") + m->name();
  throw LookupError("no model named '" + name + "' (available: " + names + ")");
}

std::string level_tag(double l) { return format_double(l); }

Eigen::MatrixXd prediction_points(const Ensemble& e, bool& test) {
  test = e.test.rows() > 0;
  return test ? e.test.x : e.data.x;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  return dynamic_cast<const NumericalError*>(&e) ? 2 : 1;
}

int cmd_fit(const Options& o) {
  const Context ctx = resolve(o);
  const Ensemble e = build_ensemble(ctx.spec);
  ensure_dir(ctx.out);
  VbmaConfig cfg = ctx.spec.vbma;
  cfg.checkpoint_path = (ctx.out / "checkpoint.txt").string();
  const EnsembleState st = run(cfg, e.models);
  const std::string hdr = header(ctx, status_name(st.status));

  std::ostringstream w;
  w << hdr << "model,prior,q,se\n";
  for (std::size_t m = 0; m < st.size(); ++m) {
    w << e.models[m]->name() << ',' << format_double(e.models[m]->prior_weight()) << ','
      << format_double(st.averaged_weights[m]) << ',' << format_double(st.weight_se[m]) << '\n';
  }
  write_file(ctx.out / "weights.csv", w.str());

  std::ostringstream t;
  t << hdr << "iteration,phase,model,elbo,q\n";
  for (std::size_t it = 0; it < st.weight_trace.size(); ++it) {
    const char* phase = static_cast<int>(it) < cfg.pretrain_iters ? "pretrain" : "joint";
    for (std::size_t m = 0; m < st.size(); ++m) {
      t << it + 1 << ',' << phase << ',' << e.models[m]->name() << ',' << format_double(st.elbo_trace[m][it])
        << ',' << format_double(st.weight_trace[it][m]) << '\n';
    }
  }
  write_file(ctx.out / "elbo_trace.csv", t.str());
  write_file(ctx.out / "checkpoint.txt", hdr + checkpoint_text(st));

  const BmaPosterior post{e.models, st.averaged_variational, st.averaged_weights};
  std::vector<CoefficientSummary> coefs;
  if (ctx.spec.family != ModelFamily::GaussianProcess) {
    std::ostringstream c;
    c << hdr << "coefficient,inclusion_probability,x,density,scaled_density\n";
    for (const auto& name : ctx.spec.schema.predictors) {
      coefs.push_back(coefficient_summary(post, name, 20000, cfg.seed));
      const auto& s = coefs.back();
      const auto scaled = s.scaled_density();
      for (std::size_t k = 0; k < s.grid.size(); ++k) {
        c << name << ',' << format_double(s.inclusion_probability) << ',' << format_double(s.grid[k]) << ','
          << format_double(s.density[k]) << ',' << format_double(scaled[k]) << '\n';
      }
      if (s.grid.empty()) c << name << ",0,,,\n";
    }
    write_file(ctx.out / "coefficients.csv", c.str());
  }

  const auto order = order_by(st.averaged_weights);
  std::printf("status: %s after %lld iterations (%lld rejected draws)\n", status_name(st.status),
              static_cast<long long>(st.iteration), static_cast<long long>(st.rejected_draws));
  std::printf("%-40s %10s %10s\n", "model", "q", "se");
  for (std::size_t r = 0; r < order.size() && r < 10; ++r) {
    const std::size_t m = order[r];
    std::printf("%-40s %10.4f %10.4f\n", e.models[m]->name().c_str(), st.averaged_weights[m], st.weight_se[m]);
  }

  if (o.svg) {
    svg::Plot elbo{"ELBO estimates", "iteration", "L_M", {}, false};
    svg::Plot weights{"q(M) trace", "iteration", "q(M)", {}, false};
    for (std::size_t r = 0; r < order.size() && r < 8; ++r) {
      const std::size_t m = order[r];
      svg::Series se{e.models[m]->name(), {}, {}, false}, sq = se;
      for (std::size_t it = 0; it < st.weight_trace.size(); ++it) {
        se.x.push_back(static_cast<double>(it + 1));
        se.y.push_back(st.elbo_trace[m][it]);
        sq.x.push_back(static_cast<double>(it + 1));
        sq.y.push_back(st.weight_trace[it][m]);
      }
      elbo.series.push_back(std::move(se));
      weights.series.push_back(std::move(sq));
    }
    write_file(ctx.out / "elbo_trace.svg", svg::render(elbo));
    write_file(ctx.out / "weight_trace.svg", svg::render(weights));
    for (const auto& s : coefs) {
      svg::Plot p{"beta[" + s.name + "]  P(included) = " + format_double(std::round(s.inclusion_probability * 1000) / 1000),
                  s.name, "scaled density", {}, false};
      svg::Series density{"density", s.grid, s.scaled_density(), false};
      svg::Series spike{"P(beta = 0)", {0.0, 0.0}, {0.0, 1.0 - s.inclusion_probability}, false};
      p.series = {density, spike};
      write_file(ctx.out / ("coefficient_" + s.name + ".svg"), svg::render(p));
    }
  }
  return 0;
}

int cmd_evidence(const Options& o) {
  const Context ctx = resolve(o);
  const Ensemble e = build_ensemble(ctx.spec);
  ensure_dir(ctx.out);
  const std::int64_t n_mc = o.mc_samples > 0 ? o.mc_samples : 100000;
  std::vector<EvidenceEstimate> ev;
  for (std::size_t m = 0; m < e.models.size(); ++m) {
    const auto* lin = dynamic_cast<const LinearRegressionModel*>(e.models[m].get());
    ev.push_back(lin ? zellner_log_evidence(*lin)
                     : mc_log_evidence(*e.models[m], n_mc, ctx.spec.vbma.seed + m, ctx.spec.vbma.threads));
  }
  const auto post = evidence_to_posterior(ev, prior_weights(e.models));
  std::ostringstream c;
  c << header(ctx, "ok") << "model,method,log_evidence,se,mc_samples,posterior_prob\n";
  for (std::size_t m = 0; m < ev.size(); ++m) {
    c << e.models[m]->name() << ',' << evidence_method_name(ev[m].method) << ',' << format_double(ev[m].log_evidence)
      << ',' << format_double(ev[m].standard_error) << ',' << ev[m].mc_samples << ',' << format_double(post[m])
      << '\n';
  }
  write_file(ctx.out / "evidence.csv", c.str());
  std::printf("%-40s %14s %10s %10s\n", "model", "log_evidence", "se", "p(M|d)");
  for (std::size_t m : order_by(post)) {
    std::printf("%-40s %14.4f %10.4f %10.4f\n", e.models[m]->name().c_str(), ev[m].log_evidence,
                ev[m].standard_error, post[m]);
  }
  return 0;
}

int cmd_bf(const Options& o) {
  if (o.model_i.empty() || o.model_j.empty()) throw ConfigError("bf needs --model-i and --model-j");
  const Context ctx = resolve(o);
  const Ensemble e = build_ensemble(ctx.spec);
  const BmaPosterior post = load_posterior(ctx, e);
  const std::size_t i = find_model(e, o.model_i), j = find_model(e, o.model_j);
  const BayesFactor vb = bayes_factor(post.weights, prior_weights(e.models), i, j);

  std::string oracle_method = "none";
  double oracle = NAN;
  if (const auto z = zellner_oracle(e)) {
    oracle_method = "zellner";
    oracle = std::exp(z->evidence[i].log_evidence - z->evidence[j].log_evidence);
  } else if (o.mc_samples > 0) {
    oracle_method = "monte_carlo";
    const auto ei = mc_log_evidence(*e.models[i], o.mc_samples, ctx.spec.vbma.seed + i, ctx.spec.vbma.threads);
    const auto ej = mc_log_evidence(*e.models[j], o.mc_samples, ctx.spec.vbma.seed + j, ctx.spec.vbma.threads);
    oracle = std::exp(ei.log_evidence - ej.log_evidence);
  }
  const std::string vb_text = vb.undefined ? "undefined" : vb.infinite ? "inf" : format_double(vb.value);
  std::ostringstream c;
  c << header(ctx, "ok") << "model_i,model_j,bf_vbma,bf_oracle,oracle_method\n";
  c << o.model_i << ',' << o.model_j << ',' << vb_text << ',' << format_double(oracle) << ',' << oracle_method << '\n';
  ensure_dir(ctx.out);
  write_file(ctx.out / "bf.csv", c.str());
  std::printf("B(%s vs %s): vbma = %s", o.model_i.c_str(), o.model_j.c_str(), vb_text.c_str());
  if (oracle_method != "none") std::printf(", %s = %.4g", oracle_method.c_str(), oracle);
  std::printf("\n");
  return 0;
}

int cmd_predict(const Options& o) {
  const Context ctx = resolve(o);
  const Ensemble e = build_ensemble(ctx.spec);
  const BmaPosterior post = load_posterior(ctx, e);
  const std::vector<double> levels = o.levels ? *o.levels : ctx.spec.levels;
  for (double l : levels) {
    if (!(l > 0.0 && l < 1.0)) throw ConfigError("--levels must lie in (0, 1)");
  }
  const int draws = o.draws ? *o.draws : ctx.spec.predict_draws;
  bool test = false;
  const Eigen::MatrixXd points = prediction_points(e, test);
  const Eigen::VectorXd& observed = test ? e.test.y : e.data.y;
  const Eigen::MatrixXd d =
      bma_draw(post, points, draws, ctx.spec.vbma.seed, ctx.spec.predict_noise, ctx.spec.vbma.threads);

  std::ostringstream c;
  c << header(ctx, "ok") << "row";
  for (const auto& n : e.data.names) c << ',' << n;
  c << ",observed,mean";
  for (double l : levels) c << ",lo@" << level_tag(l) << ",hi@" << level_tag(l);
  c << '\n';
  std::vector<double> row(static_cast<std::size_t>(d.cols()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    c << i + 1;
    for (Eigen::Index j = 0; j < points.cols(); ++j) c << ',' << format_double(points(i, j));
    c << ',' << format_double(observed(i)) << ',' << format_double(d.row(i).mean());
    for (Eigen::Index k = 0; k < d.cols(); ++k) row[static_cast<std::size_t>(k)] = d(i, k);
    std::sort(row.begin(), row.end());
    for (double l : levels) {
      c << ',' << format_double(quantile_sorted(row, 0.5 * (1.0 - l))) << ','
        << format_double(quantile_sorted(row, 1.0 - 0.5 * (1.0 - l)));
    }
    c << '\n';
  }
  ensure_dir(ctx.out);
  write_file(ctx.out / "predict.csv", c.str());
  std::printf("wrote %lld %s predictions to %s\n", static_cast<long long>(points.rows()),
              test ? "test-set" : "in-sample", (ctx.out / "predict.csv").string().c_str());
  return 0;
}

int cmd_coverage(const Options& o) {
  const Context ctx = resolve(o);
  const Ensemble e = build_ensemble(ctx.spec);
  if (e.test.rows() == 0) {
    throw ConfigError("coverage needs held-out rows: set [data] split_fraction or split_column");
  }
  const BmaPosterior post = load_posterior(ctx, e);
  const std::vector<double> levels = o.levels ? *o.levels : ctx.spec.levels;
  if (levels.empty()) throw ConfigError("coverage needs at least one level");
  const int draws = o.draws ? *o.draws : ctx.spec.predict_draws;
  const int threads = ctx.spec.vbma.threads;
  const Eigen::MatrixXd dv = bma_draw(post, e.test.x, draws, ctx.spec.vbma.seed, true, threads);
  const std::vector<double> cv = coverage_curve(dv, e.test.y, levels);
  std::vector<double> co(levels.size(), NAN);
  if (const auto z = zellner_oracle(e)) {
    const Eigen::MatrixXd dz =
        mixture_draw(e.models, z->weights, z->sampler(), e.test.x, draws, ctx.spec.vbma.seed, true, threads);
    co = coverage_curve(dz, e.test.y, levels);
  }
  std::ostringstream c;
  c << header(ctx, "ok") << "level,coverage_vbma,coverage_oracle\n";
  std::printf("%8s %14s %16s\n", "level", "coverage_vbma", "coverage_oracle");
  for (std::size_t l = 0; l < levels.size(); ++l) {
    c << format_double(levels[l]) << ',' << format_double(cv[l]) << ',' << format_double(co[l]) << '\n';
    std::printf("%8.2f %14.4f %16.4f\n", levels[l], cv[l], co[l]);
  }
  ensure_dir(ctx.out);
  write_file(ctx.out / "coverage.csv", c.str());
  if (o.svg) {
    svg::Plot p{"Predictive interval coverage", "credibility level", "empirical coverage", {}, true};
    p.series.push_back({"VBMA", levels, cv, false});
    if (std::isfinite(co.front())) p.series.push_back({"exact", levels, co, true});
    write_file(ctx.out / "coverage.svg", svg::render(p));
  }
  return 0;
}

int cmd_synth(const Options& o) {
  SynthGpOptions s = o.synth;
  if (o.seed) s.seed = *o.seed;
  const Dataset d = synth_gp_dataset(s);
  const fs::path out(o.out);
  ensure_dir(out);
  std::ostringstream params;
  params << s.width << 'x' << s.height << ";test=" << s.test_columns << ";beta=" << format_double(s.beta)
         << ";eta=" << format_double(s.eta) << ";nu1=" << format_double(s.nu1) << ";nu2=" << format_double(s.nu2)
         << ";sigma=" << format_double(s.sigma);
  const std::string hdr = std::string("# vbma version=") + VBMA_VERSION + " seed=" + std::to_string(s.seed) +
                          " config=" + text::fingerprint(params.str()) + " status=ok\n";
  write_file(out / o.synth_file, hdr + to_csv(d, true));
  std::printf("wrote %lld rows (%lld train) to %s\n", static_cast<long long>(d.rows()),
              static_cast<long long>(d.train_count()), (out / o.synth_file).string().c_str());
  return 0;
}

}  // namespace vbma::cli
