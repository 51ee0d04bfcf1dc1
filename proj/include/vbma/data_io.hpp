#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace vbma {

struct ColumnTransform {
  bool log = false;
  bool center = false;
  double offset = 0.0;  ///< Subtracted after the optional log.
};

struct Schema {
  std::vector<std::string> predictors;
  std::string response;
  std::string split_column;  ///< Optional column of "train"/"test" tags.
};

struct Dataset {
  std::vector<std::string> names;  ///< Predictor columns of x.
  Eigen::MatrixXd x;
  std::string response_name;
  Eigen::VectorXd y;
  std::vector<ColumnTransform> transforms;
  ColumnTransform response_transform;
  std::vector<char> train;  ///< 1 marks a training row.

  Eigen::Index rows() const noexcept { return y.size(); }
  Eigen::Index train_count() const;
  /// Index of a predictor column; throws LookupError.
  std::size_t column(const std::string& name) const;
  /// Rows tagged as training (true) or test (false), with transforms kept.
  Dataset rows_where(bool training) const;
};

/// Parses comma-separated text. Lines starting with '#' are skipped; the first
/// remaining line is the header. `source` labels error messages.
Dataset parse_csv(const std::string& text, const Schema& schema,
                  const std::string& source = "<memory>");
Dataset load_csv(const std::string& path, const Schema& schema);

struct TransformSpec {
  std::vector<std::string> log;     ///< Columns (predictors or response) to log.
  std::vector<std::string> center;  ///< Columns to center on the training rows.
};

Dataset prepare(const Dataset& data, const TransformSpec& spec);

/// Undoes prepare(): returns the data on the original scale with transforms cleared.
Dataset invert(const Dataset& data);
double invert_response(const ColumnTransform& t, double value);

/// Tags round(fraction * n) randomly chosen rows as training. fraction in (0, 1].
Dataset split(const Dataset& data, double fraction, std::uint64_t seed);

struct SynthGpOptions {
  int width = 20;   ///< Lattice extent along x1.
  int height = 20;  ///< Lattice extent along x2.
  int test_columns = 5;  ///< Rows with x2 >= height - test_columns are held out.
  double beta = 0.0, eta = 1.0, nu1 = 3.0, nu2 = 3.0, sigma = 0.3;
  std::uint64_t seed = 1;
};

/// y ~ N(beta 1, K + sigma^2 I) on an integer lattice with columns x1, x2.
Dataset synth_gp_dataset(const SynthGpOptions& options);

/// CSV with the predictor columns, the response and, optionally, a split column.
std::string to_csv(const Dataset& data, bool with_split);

}  // namespace vbma
