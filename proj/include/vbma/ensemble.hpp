#pragma once

// Ensemble declaration files. INI syntax: `[section]` headers, `key = value`
// lines, `;` or `#` comments, comma-separated lists. Unknown sections or keys
// are errors. See README.md for the full key list.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vbma/data_io.hpp"
#include "vbma/model.hpp"
#include "vbma/models.hpp"
#include "vbma/vbma.hpp"

namespace vbma {

enum class ModelFamily { Linear, Logistic, GaussianProcess };

const char* model_family_name(ModelFamily f);

struct EnsembleSpec {
  std::string text;  ///< Declaration file contents, hashed into artifact headers.
  std::filesystem::path base_dir;

  std::string data_path;
  Schema schema;
  TransformSpec transforms;
  double split_fraction = 1.0;
  std::uint64_t split_seed = 1;

  ModelFamily family = ModelFamily::Linear;
  double g = 0.0;          ///< Linear; 0 means g = n.
  double prior_sd = 3.0;   ///< Logistic.
  std::vector<double> gp_offsets{0.0};
  bool gp_offsets_in_sd = true;  ///< Offsets in units of the training response sd.
  GpPrior gp_prior{};
  double gp_relative_jitter = 1e-6;

  VbmaConfig vbma{};

  int predict_draws = 4000;
  std::vector<double> levels;
  bool predict_noise = true;

  std::filesystem::path resolved_data_path() const;
};

EnsembleSpec parse_ensemble(const std::string& text, const std::filesystem::path& base_dir = ".");
EnsembleSpec load_ensemble(const std::filesystem::path& path);

struct Ensemble {
  Dataset data;   ///< Prepared and split.
  Dataset train;
  Dataset test;
  std::vector<ModelPtr> models;
};

/// Loads and prepares the data, then builds every candidate model with a
/// uniform prior p(M) = 1/K. Regression families enumerate all 2^k predictor
/// subsets in binary order of the subset mask.
Ensemble build_ensemble(const EnsembleSpec& spec);

/// "null" for the empty subset, otherwise names joined by '+'.
std::string subset_label(const std::vector<std::string>& names, const std::vector<int>& subset);

}  // namespace vbma
