#include "vbma/vbma.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "vbma/autodiff.hpp"
#include "vbma/errors.hpp"
#include "vbma/math.hpp"
#include "vbma/text.hpp"

namespace vbma {

void VbmaConfig::validate() const {
  if (samples < 1) throw ConfigError("samples (S) must be at least 1");
  if (pretrain_iters < 0 || joint_iters < 0) throw ConfigError("iteration counts must be non-negative");
  if (window < 1) throw ConfigError("averaging window must be at least 1");
  if (joint_iters > 0 && window > joint_iters) {
    throw ConfigError("averaging window (" + std::to_string(window) +
                      ") exceeds joint iterations (" + std::to_string(joint_iters) + ")");
  }
  if (convergence_window < 0) throw ConfigError("convergence window must be non-negative");
  if (!(tolerance >= 0.0)) throw ConfigError("tolerance must be non-negative");
  if (!(initial_variance > 0.0)) throw ConfigError("initial variance must be positive");
  if (threads < 1) throw ConfigError("threads must be at least 1");
}

const char* status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Running: return "running";
    case RunStatus::Converged: return "converged";
    case RunStatus::BudgetExhausted: return "budget";
  }
  return "unknown";
}

namespace {

struct DrawResult {
  std::vector<double> gradient;
  double value = 0.0;
};

// One reparametrized draw: the tape takes lambda = (mu, raw) as inputs, maps
// through theta = t(z, lambda), and differentiates log p(d, theta) -
// log q(theta | lambda) with lambda frozen inside q. The result is
// grad_theta(...) * grad_lambda t.
DrawResult single_draw(const Model& model, const VariationalState& state,
                       std::span<const double> z) {
  ad::Tape tape;
  const std::vector<ad::Var> loc = tape.inputs(state.location);
  const std::vector<ad::Var> raw = tape.inputs(state.raw_scale);
  const std::vector<ad::Var> theta = reparam_transform<ad::Var>(loc, raw, state.families, z);
  const std::span<const ad::Var> th(theta);
  const ad::Var objective = model.log_joint(th) - log_q<ad::Var>(state, th);
  DrawResult out{tape.gradient(objective), objective.value()};
  if (!std::isfinite(out.value)) throw NonFiniteError("elbo", "log joint minus log q is not finite");
  for (double g : out.gradient) {
    if (!std::isfinite(g)) throw NonFiniteError("reverse sweep", "gradient entry is not finite");
  }
  return out;
}

void check_draw_size(const Model& model, std::span<const double> z) {
  if (z.size() != model.dimension()) {
    throw DimensionError("model '" + model.name() + "': draw has length " +
                         std::to_string(z.size()) + ", expected " +
                         std::to_string(model.dimension()));
  }
}

}  // namespace

GradientEstimate estimate_grad_and_elbo(const Model& model, const VariationalState& state,
                                        std::span<const std::vector<double>> z) {
  if (z.empty()) throw ConfigError("estimate_grad_and_elbo: at least one draw is required");
  GradientEstimate est;
  est.gradient.assign(2 * state.size(), 0.0);
  for (const auto& draw : z) {
    check_draw_size(model, draw);
    const DrawResult r = single_draw(model, state, draw);
    for (std::size_t i = 0; i < r.gradient.size(); ++i) est.gradient[i] += r.gradient[i];
    est.elbo += r.value;
  }
  const double s = static_cast<double>(z.size());
  for (double& g : est.gradient) g /= s;
  est.elbo /= s;
  return est;
}

GradientEstimate estimate_grad_and_elbo(const Model& model, const VariationalState& state,
                                        int samples, Rng& rng) {
  if (samples < 1) throw ConfigError("estimate_grad_and_elbo: samples must be at least 1");
  GradientEstimate est;
  est.gradient.assign(2 * state.size(), 0.0);
  std::vector<double> z(state.size());
  int accepted = 0;
  std::string last_failure;
  while (accepted < samples) {
    fill_standard_normal(rng, z);
    try {
      const DrawResult r = single_draw(model, state, z);
      for (std::size_t i = 0; i < r.gradient.size(); ++i) est.gradient[i] += r.gradient[i];
      est.elbo += r.value;
      ++accepted;
    } catch (const NonFiniteError& e) {
      ++est.rejected;
      last_failure = e.what();
    } catch (const ConditioningError& e) {
      ++est.rejected;
      last_failure = e.what();
    }
    if (est.rejected > samples) {
      throw IterationError("model '" + model.name() + "': more than half of the draws were rejected (" +
                           std::to_string(est.rejected) + " rejected); last failure: " + last_failure);
    }
  }
  const double s = static_cast<double>(samples);
  for (double& g : est.gradient) g /= s;
  est.elbo /= s;
  return est;
}

std::vector<double> update_weights(std::span<const double> elbo,
                                   std::span<const double> log_prior_weights) {
  if (elbo.size() != log_prior_weights.size()) {
    throw DimensionError("update_weights: ELBO and prior vectors differ in length");
  }
  if (elbo.empty()) throw DimensionError("update_weights: empty model set");
  std::vector<double> logits(elbo.size());
  for (std::size_t i = 0; i < elbo.size(); ++i) {
    if (std::isnan(elbo[i]) || std::isnan(log_prior_weights[i])) {
      throw NonFiniteError("update_weights", "NaN in log weights");
    }
    logits[i] = elbo[i] + log_prior_weights[i];
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  if (m == -INFINITY) throw NumericalError("update_weights: every log weight is -infinity");
  if (!std::isfinite(m)) throw NonFiniteError("update_weights", "log weight is +infinity");
  std::vector<double> q(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    q[i] = std::exp(logits[i] - m);
    total += q[i];
  }
  for (double& v : q) v /= total;
  return q;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  std::vector<std::exception_ptr> errors(n);
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
  auto work = [&](std::size_t start) {
    for (std::size_t i = start; i < n; i += workers) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

EnsembleState initialize(std::vector<ModelPtr> models, const VbmaConfig& config) {
  config.validate();
  if (models.empty()) throw ConfigError("ensemble has no models");
  double total_prior = 0.0;
  for (const auto& m : models) total_prior += m->prior_weight();
  if (std::abs(total_prior - 1.0) > 1e-9) {
    throw ConfigError("prior model weights sum to " + text::format_double(total_prior) +
                      ", expected 1");
  }
  EnsembleState s;
  s.models = std::move(models);
  const std::size_t k = s.models.size();
  for (const auto& m : s.models) {
    s.variational.emplace_back(m->layout(), config.initial_variance);
    s.optimizers.emplace_back(config.optimizer, 2 * m->dimension());
  }
  s.weights.assign(k, 1.0 / static_cast<double>(k));
  s.log_weights.assign(k, 0.0);
  s.elbo_trace.assign(k, {});
  s.phase = config.pretrain_iters > 0 ? Phase::PreTrain : Phase::Joint;
  return s;
}

void iterate(EnsembleState& state, const VbmaConfig& config) {
  const std::size_t k = state.size();
  std::vector<double> elbo(k, 0.0);
  std::vector<int> rejected(k, 0);
  const bool joint = state.phase == Phase::Joint;
  const double uniform = 1.0 / static_cast<double>(k);

  parallel_for(k, config.threads, [&](std::size_t m) {
    Rng rng = substream(config.seed, m, static_cast<std::uint64_t>(state.iteration));
    const GradientEstimate est =
        estimate_grad_and_elbo(*state.models[m], state.variational[m], config.samples, rng);
    const double scale = joint ? state.weights[m] : uniform;
    std::vector<double> g(est.gradient);
    for (double& v : g) v *= scale;
    std::vector<double> lambda = state.variational[m].packed();
    const StepResult r = state.optimizers[m].step(lambda, g);
    if (!r.applied) {
      throw IterationError("model '" + state.models[m]->name() + "': step rejected: " + r.diagnostic);
    }
    state.variational[m].unpack(lambda);
    elbo[m] = est.elbo;
    rejected[m] = est.rejected;
  });

  for (std::size_t m = 0; m < k; ++m) {
    state.elbo_trace[m].push_back(elbo[m]);
    state.rejected_draws += rejected[m];
    state.log_weights[m] = elbo[m] + std::log(state.models[m]->prior_weight());
  }
  if (joint) {
    std::vector<double> log_prior(k);
    for (std::size_t m = 0; m < k; ++m) log_prior[m] = std::log(state.models[m]->prior_weight());
    state.weights = update_weights(elbo, log_prior);
    ++state.joint_iterations;
  }
  double objective = 0.0;
  for (std::size_t m = 0; m < k; ++m) objective += state.weights[m] * elbo[m];
  state.objective_trace.push_back(objective);
  state.weight_trace.push_back(state.weights);
  ++state.iteration;
  if (state.phase == Phase::PreTrain && state.iteration >= config.pretrain_iters) {
    state.phase = Phase::Joint;
  }
}

namespace {

// Moving averages of the objective over consecutive, non-overlapping windows
// of the joint phase; stop once two successive comparisons both move by less
// than the tolerance.
bool objective_stabilized(const EnsembleState& s, const VbmaConfig& c) {
  const std::int64_t w = c.convergence_window;
  if (w <= 0 || s.joint_iterations < std::max<std::int64_t>(c.window, 3 * w)) return false;
  if (s.joint_iterations % w != 0) return false;
  const auto& tr = s.objective_trace;
  auto mean_of = [&](std::int64_t back) {
    const auto end = static_cast<std::ptrdiff_t>(tr.size()) - back * w;
    double acc = 0.0;
    for (std::ptrdiff_t i = end - w; i < end; ++i) acc += tr[static_cast<std::size_t>(i)];
    return acc / static_cast<double>(w);
  };
  const double a0 = mean_of(0), a1 = mean_of(1), a2 = mean_of(2);
  auto rel = [](double x, double y) { return std::abs(x - y) / std::max(std::abs(y), 1e-300); };
  return rel(a0, a1) < c.tolerance && rel(a1, a2) < c.tolerance;
}

void write_checkpoint(const EnsembleState& state, const VbmaConfig& config) {
  if (config.checkpoint_path.empty()) return;
  std::ofstream out(config.checkpoint_path);
  if (!out) throw ConfigError("cannot write checkpoint '" + config.checkpoint_path + "'");
  out << checkpoint_text(state);
}

}  // namespace

void finalize(EnsembleState& state, const VbmaConfig& config) {
  const std::size_t k = state.size();
  const auto total = static_cast<std::int64_t>(state.weight_trace.size());
  const std::int64_t available = state.joint_iterations > 0 ? state.joint_iterations : total;
  const std::int64_t w = std::min<std::int64_t>(config.window, available);
  state.averaged_weights.assign(k, 0.0);
  state.weight_se.assign(k, 0.0);
  state.averaged_variational = state.variational;
  if (w <= 0) {
    state.averaged_weights = state.weights;
    return;
  }
  for (std::int64_t i = total - w; i < total; ++i) {
    for (std::size_t m = 0; m < k; ++m) state.averaged_weights[m] += state.weight_trace[static_cast<std::size_t>(i)][m];
  }
  for (double& q : state.averaged_weights) q /= static_cast<double>(w);
  if (w > 1) {
    for (std::int64_t i = total - w; i < total; ++i) {
      for (std::size_t m = 0; m < k; ++m) {
        const double d = state.weight_trace[static_cast<std::size_t>(i)][m] - state.averaged_weights[m];
        state.weight_se[m] += d * d;
      }
    }
    for (double& se : state.weight_se) se = std::sqrt(se / static_cast<double>(w - 1) / static_cast<double>(w));
  }
}

EnsembleState run(const VbmaConfig& config, std::vector<ModelPtr> models,
                  const IterationObserver& observer) {
  EnsembleState state = initialize(std::move(models), config);
  // The variational parameters are also averaged over the trailing window.
  std::vector<std::vector<double>> lambda_sum(state.size());
  std::int64_t lambda_count = 0;
  const std::int64_t budget = static_cast<std::int64_t>(config.pretrain_iters) + config.joint_iters;
  const std::int64_t averaging_start = budget - config.window;

  while (state.iteration < budget) {
    try {
      iterate(state, config);
    } catch (const Error& e) {
      write_checkpoint(state, config);
      throw IterationError("iteration " + std::to_string(state.iteration) + ": " + e.what());
    }
    if (observer) observer(state);
    if (state.iteration > averaging_start) {
      for (std::size_t m = 0; m < state.size(); ++m) {
        const auto packed = state.variational[m].packed();
        if (lambda_sum[m].empty()) lambda_sum[m].assign(packed.size(), 0.0);
        for (std::size_t i = 0; i < packed.size(); ++i) lambda_sum[m][i] += packed[i];
      }
      ++lambda_count;
    }
    if (config.checkpoint_every > 0 && state.iteration % config.checkpoint_every == 0) {
      write_checkpoint(state, config);
    }
    if (state.phase == Phase::Joint && objective_stabilized(state, config)) {
      state.status = RunStatus::Converged;
      break;
    }
  }
  if (state.status == RunStatus::Running) state.status = RunStatus::BudgetExhausted;
  finalize(state, config);
  if (state.status == RunStatus::BudgetExhausted && lambda_count > 0) {
    for (std::size_t m = 0; m < state.size(); ++m) {
      std::vector<double> mean(lambda_sum[m]);
      for (double& v : mean) v /= static_cast<double>(lambda_count);
      state.averaged_variational[m].unpack(mean);
    }
  }
  write_checkpoint(state, config);
  return state;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

std::string join_numbers(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += text::format_double(v[i]);
  }
  return s;
}

std::vector<double> parse_numbers(const std::string& rest, const std::string& context) {
  std::vector<double> out;
  std::istringstream in(rest);
  std::string tok;
  while (in >> tok) out.push_back(text::parse_double(tok, context));
  return out;
}

const char* phase_name(Phase p) { return p == Phase::Joint ? "joint" : "pretrain"; }

}  // namespace

std::string checkpoint_text(const EnsembleState& state) {
  std::ostringstream out;
  out << "vbma-checkpoint 1\n";
  out << "iteration " << state.iteration << "\n";
  out << "phase " << phase_name(state.phase) << "\n";
  out << "status " << status_name(state.status) << "\n";
  out << "models " << state.size() << "\n";
  for (std::size_t m = 0; m < state.size(); ++m) {
    out << "model " << state.models[m]->name() << "\n";
    out << "weight " << text::format_double(state.weights[m]) << "\n";
    const double avg = m < state.averaged_weights.size() ? state.averaged_weights[m] : state.weights[m];
    const double se = m < state.weight_se.size() ? state.weight_se[m] : 0.0;
    out << "averaged_weight " << text::format_double(avg) << "\n";
    out << "weight_se " << text::format_double(se) << "\n";
    out << "log_weight " << text::format_double(state.log_weights[m]) << "\n";
    out << "optimizer_steps " << state.optimizers[m].steps() << "\n";
    out << "first_moment " << join_numbers(state.optimizers[m].first_moment()) << "\n";
    out << "second_moment " << join_numbers(state.optimizers[m].second_moment()) << "\n";
    out << "state\n" << to_text(state.variational[m]) << "end\n";
    const VariationalState& avg_state =
        m < state.averaged_variational.size() ? state.averaged_variational[m] : state.variational[m];
    out << "averaged_state\n" << to_text(avg_state) << "end\n";
  }
  return out.str();
}

Checkpoint parse_checkpoint(const std::string& text_in) {
  Checkpoint c;
  std::istringstream in(text_in);
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    throw ConfigError("checkpoint line " + std::to_string(line_no) + ": " + why);
  };
  auto read_block = [&]() {
    std::string block;
    while (std::getline(in, line)) {
      ++line_no;
      if (text::trim(line) == "end") return variational_state_from_text(block);
      block += line + "\n";
    }
    fail("unterminated state block");
    return VariationalState{};
  };
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    header = t == "vbma-checkpoint 1";
    break;
  }
  if (!header) throw ConfigError("not a vbma checkpoint (missing 'vbma-checkpoint 1' header)");
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body(text::trim(line));
    if (body.empty()) continue;
    const auto sp = body.find(' ');
    const std::string key = body.substr(0, sp);
    const std::string rest = sp == std::string::npos ? "" : body.substr(sp + 1);
    const std::string ctx = "checkpoint line " + std::to_string(line_no);
    if (key == "iteration") {
      c.iteration = text::parse_int(rest, ctx);
    } else if (key == "phase") {
      c.phase = rest == "joint" ? Phase::Joint : Phase::PreTrain;
    } else if (key == "status") {
      c.status = rest == "converged" ? RunStatus::Converged
                 : rest == "budget"  ? RunStatus::BudgetExhausted
                                     : RunStatus::Running;
    } else if (key == "models") {
      // informational
    } else if (key == "model") {
      c.names.push_back(rest);
    } else if (key == "weight") {
      c.weights.push_back(text::parse_double(rest, ctx));
    } else if (key == "averaged_weight") {
      c.averaged_weights.push_back(text::parse_double(rest, ctx));
    } else if (key == "weight_se") {
      c.weight_se.push_back(text::parse_double(rest, ctx));
    } else if (key == "log_weight") {
      c.log_weights.push_back(text::parse_double(rest, ctx));
    } else if (key == "optimizer_steps") {
      c.optimizer_steps.push_back(text::parse_int(rest, ctx));
    } else if (key == "first_moment") {
      c.first_moments.push_back(parse_numbers(rest, ctx));
    } else if (key == "second_moment") {
      c.second_moments.push_back(parse_numbers(rest, ctx));
    } else if (key == "state") {
      c.variational.push_back(read_block());
    } else if (key == "averaged_state") {
      c.averaged_variational.push_back(read_block());
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  const std::size_t k = c.names.size();
  if (c.weights.size() != k || c.averaged_weights.size() != k || c.variational.size() != k ||
      c.averaged_variational.size() != k) {
    throw ConfigError("checkpoint is incomplete: per-model sections are missing");
  }
  return c;
}

}  // namespace vbma
