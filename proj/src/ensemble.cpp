#include "vbma/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "vbma/errors.hpp"
#include "vbma/prediction.hpp"
#include "vbma/text.hpp"

namespace vbma {

const char* model_family_name(ModelFamily f) {
  switch (f) {
    case ModelFamily::Linear: return "linear";
    case ModelFamily::Logistic: return "logistic";
    case ModelFamily::GaussianProcess: return "gp";
  }
  return "unknown";
}

std::filesystem::path EnsembleSpec::resolved_data_path() const {
  const std::filesystem::path p(data_path);
  return p.is_absolute() ? p : base_dir / p;
}

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"data",
       {"path", "response", "predictors", "log", "center", "split_column", "split_fraction",
        "split_seed"}},
      {"models", {"family", "g", "prior_sd"}},
      {"gp",
       {"offsets", "offset_unit", "beta_sd", "log_eta_mean", "log_eta_sd", "log_nu_mean",
        "log_nu_sd", "log_sigma_mean", "log_sigma_sd", "relative_jitter"}},
      {"vbma",
       {"samples", "pretrain_iters", "joint_iters", "window", "seed", "optimizer", "step_size",
        "beta1", "beta2", "eps", "initial_variance", "tolerance", "convergence_window", "threads",
        "checkpoint_every"}},
      {"predict", {"draws", "levels", "noise"}},
  };
  return keys;
}

std::vector<std::string> parse_list(const std::string& value) {
  std::vector<std::string> out;
  for (const auto& item : text::split(value, ',')) {
    const auto t = text::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  bool has(const std::string& key) const { return tree_ && tree_->find(key) != tree_->not_found(); }
  std::string raw(const std::string& key) const {
    return std::string(text::trim(tree_->get<std::string>(key)));
  }
  std::string str(const std::string& key, const std::string& fallback) const {
    return has(key) ? raw(key) : fallback;
  }
  std::string required(const std::string& key) const {
    if (!has(key)) throw ConfigError("[" + name_ + "] is missing required key '" + key + "'");
    return raw(key);
  }
  double real(const std::string& key, double fallback) const {
    return has(key) ? text::parse_double(raw(key), context(key)) : fallback;
  }
  long long integer(const std::string& key, long long fallback) const {
    return has(key) ? text::parse_int(raw(key), context(key)) : fallback;
  }
  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = raw(key);
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigError(context(key) + ": expected true or false, got '" + v + "'");
  }
  std::vector<std::string> list(const std::string& key) const {
    return has(key) ? parse_list(raw(key)) : std::vector<std::string>{};
  }
  std::vector<double> reals(const std::string& key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    std::vector<double> out;
    for (const auto& item : list(key)) out.push_back(text::parse_double(item, context(key)));
    return out;
  }

 private:
  std::string context(const std::string& key) const { return "[" + name_ + "] " + key; }
  const pt::ptree* tree_;
  std::string name_;
};

}  // namespace

EnsembleSpec parse_ensemble(const std::string& text_in, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  std::istringstream in(text_in);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("ensemble file: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) {
      if (body.empty()) throw ConfigError("ensemble file: key '" + section + "' outside any section");
      throw ConfigError("ensemble file: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) throw ConfigError("ensemble file: unknown key '" + key + "' in [" + section + "]");
    }
  }
  auto section = [&](const std::string& name) {
    const auto child = tree.get_child_optional(name);
    return Section(child ? &*child : nullptr, name);
  };

  EnsembleSpec s;
  s.text = text_in;
  s.base_dir = base_dir;

  const Section data = section("data");
  s.data_path = data.required("path");
  s.schema.response = data.required("response");
  s.schema.predictors = data.list("predictors");
  s.schema.split_column = data.str("split_column", "");
  s.transforms.log = data.list("log");
  s.transforms.center = data.list("center");
  s.split_fraction = data.real("split_fraction", 1.0);
  s.split_seed = static_cast<std::uint64_t>(data.integer("split_seed", 1));
  if (!s.schema.split_column.empty() && data.has("split_fraction")) {
    throw ConfigError("[data] split_column and split_fraction are mutually exclusive");
  }

  const Section models = section("models");
  const std::string family = models.str("family", "linear");
  if (family == "linear") {
    s.family = ModelFamily::Linear;
  } else if (family == "logistic") {
    s.family = ModelFamily::Logistic;
  } else if (family == "gp") {
    s.family = ModelFamily::GaussianProcess;
  } else {
    throw ConfigError("[models] family: expected linear, logistic or gp, got '" + family + "'");
  }
  s.g = models.real("g", 0.0);
  s.prior_sd = models.real("prior_sd", 3.0);
  if (!(s.prior_sd > 0.0)) throw ConfigError("[models] prior_sd must be positive");
  if (s.family == ModelFamily::GaussianProcess && s.schema.predictors.size() != 2) {
    throw ConfigError("[data] predictors: the gp family needs exactly two input columns");
  }
  if (s.family != ModelFamily::GaussianProcess && s.schema.predictors.size() > 16) {
    throw ConfigError("[data] predictors: at most 16 candidates (2^k subset ensemble)");
  }

  const Section gp_sec = section("gp");
  s.gp_offsets = gp_sec.reals("offsets", {0.0});
  const std::string unit = gp_sec.str("offset_unit", "sd");
  if (unit != "sd" && unit != "absolute") throw ConfigError("[gp] offset_unit: expected sd or absolute");
  s.gp_offsets_in_sd = unit == "sd";
  s.gp_prior.beta_sd = gp_sec.real("beta_sd", s.gp_prior.beta_sd);
  s.gp_prior.log_eta_mean = gp_sec.real("log_eta_mean", s.gp_prior.log_eta_mean);
  s.gp_prior.log_eta_sd = gp_sec.real("log_eta_sd", s.gp_prior.log_eta_sd);
  s.gp_prior.log_nu_mean = gp_sec.real("log_nu_mean", s.gp_prior.log_nu_mean);
  s.gp_prior.log_nu_sd = gp_sec.real("log_nu_sd", s.gp_prior.log_nu_sd);
  s.gp_prior.log_sigma_mean = gp_sec.real("log_sigma_mean", s.gp_prior.log_sigma_mean);
  s.gp_prior.log_sigma_sd = gp_sec.real("log_sigma_sd", s.gp_prior.log_sigma_sd);
  s.gp_relative_jitter = gp_sec.real("relative_jitter", s.gp_relative_jitter);
  if (s.gp_offsets.empty()) throw ConfigError("[gp] offsets must list at least one value");

  const Section v = section("vbma");
  VbmaConfig& c = s.vbma;
  c.samples = static_cast<int>(v.integer("samples", c.samples));
  c.pretrain_iters = static_cast<int>(v.integer("pretrain_iters", c.pretrain_iters));
  c.joint_iters = static_cast<int>(v.integer("joint_iters", c.joint_iters));
  c.window = static_cast<int>(v.integer("window", c.window));
  c.seed = static_cast<std::uint64_t>(v.integer("seed", static_cast<long long>(c.seed)));
  const OptimizerKind kind = parse_optimizer(v.str("optimizer", "adam"));
  c.optimizer = kind == OptimizerKind::RmsProp ? OptimizerSettings::rmsprop() : OptimizerSettings::adam();
  c.optimizer.kind = kind;
  c.optimizer.step_size = v.real("step_size", c.optimizer.step_size);
  c.optimizer.beta1 = v.real("beta1", c.optimizer.beta1);
  c.optimizer.beta2 = v.real("beta2", c.optimizer.beta2);
  c.optimizer.eps = v.real("eps", c.optimizer.eps);
  c.optimizer.schedule.a = c.optimizer.step_size;
  c.initial_variance = v.real("initial_variance", c.initial_variance);
  c.tolerance = v.real("tolerance", c.tolerance);
  c.convergence_window = static_cast<int>(v.integer("convergence_window", c.convergence_window));
  c.threads = static_cast<int>(v.integer("threads", c.threads));
  c.checkpoint_every = static_cast<int>(v.integer("checkpoint_every", c.checkpoint_every));

  const Section p = section("predict");
  s.predict_draws = static_cast<int>(p.integer("draws", s.predict_draws));
  s.levels = p.reals("levels", default_levels());
  s.predict_noise = p.boolean("noise", true);
  for (double l : s.levels) {
    if (!(l > 0.0 && l < 1.0)) throw ConfigError("[predict] levels must lie in (0, 1)");
  }
  if (s.predict_draws < 1) throw ConfigError("[predict] draws must be positive");
  c.validate();
  return s;
}

EnsembleSpec load_ensemble(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open ensemble file '" + path.string() + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_ensemble(buf.str(), path.parent_path().empty() ? "." : path.parent_path());
}

std::string subset_label(const std::vector<std::string>& names, const std::vector<int>& subset) {
  if (subset.empty()) return "null";
  std::string s;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (i) s += '+';
    s += names.at(static_cast<std::size_t>(subset[i]));
  }
  return s;
}

Ensemble build_ensemble(const EnsembleSpec& spec) {
  Ensemble e;
  Dataset raw = load_csv(spec.resolved_data_path().string(), spec.schema);
  if (spec.schema.split_column.empty() && spec.split_fraction < 1.0) {
    raw = split(raw, spec.split_fraction, spec.split_seed);
  }
  e.data = prepare(raw, spec.transforms);
  e.train = e.data.rows_where(true);
  e.test = e.data.rows_where(false);
  if (e.train.rows() == 0) throw ConfigError("no training rows after the split");

  std::vector<std::shared_ptr<Model>> models;
  if (spec.family == ModelFamily::GaussianProcess) {
    double unit = 1.0;
    if (spec.gp_offsets_in_sd) {
      const Eigen::VectorXd& y = e.train.y;
      const double mean = y.mean();
      unit = y.size() > 1 ? std::sqrt((y.array() - mean).square().sum() / static_cast<double>(y.size() - 1)) : 1.0;
    }
    for (double off : spec.gp_offsets) {
      const std::string name =
          "gp_offset_" + text::format_double(off) + (spec.gp_offsets_in_sd ? "sd" : "");
      models.push_back(std::make_shared<GaussianProcessModel>(name, e.train.x, e.train.y, off * unit,
                                                              spec.gp_prior, spec.gp_relative_jitter));
    }
  } else {
    const auto k = spec.schema.predictors.size();
    for (unsigned mask = 0; mask < (1u << k); ++mask) {
      std::vector<int> subset;
      for (unsigned j = 0; j < k; ++j) {
        if (mask & (1u << j)) subset.push_back(static_cast<int>(j));
      }
      const std::string name = subset_label(spec.schema.predictors, subset);
      if (spec.family == ModelFamily::Linear) {
        models.push_back(std::make_shared<LinearRegressionModel>(name, e.train.x, e.train.y, subset,
                                                                 spec.schema.predictors, spec.g));
      } else {
        models.push_back(std::make_shared<LogisticRegressionModel>(
            name, e.train.x, e.train.y, subset, spec.schema.predictors, spec.prior_sd));
      }
    }
  }
  assign_uniform_prior(models);
  e.models.assign(models.begin(), models.end());
  return e;
}

}  // namespace vbma
