#include "vbma/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <Eigen/Cholesky>

#include "vbma/errors.hpp"
#include "vbma/gp.hpp"
#include "vbma/rng.hpp"
#include "vbma/text.hpp"

namespace vbma {

Eigen::Index Dataset::train_count() const {
  return std::count(train.begin(), train.end(), char{1});
}

std::size_t Dataset::column(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw LookupError("dataset has no predictor column '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

Dataset Dataset::rows_where(bool training) const {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < rows(); ++i) {
    if ((train[static_cast<std::size_t>(i)] != 0) == training) keep.push_back(i);
  }
  Dataset out = *this;
  out.x.resize(static_cast<Eigen::Index>(keep.size()), x.cols());
  out.y.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.x.row(static_cast<Eigen::Index>(r)) = x.row(keep[r]);
    out.y(static_cast<Eigen::Index>(r)) = y(keep[r]);
  }
  out.train.assign(keep.size(), training ? 1 : 0);
  return out;
}

Dataset parse_csv(const std::string& text_in, const Schema& schema, const std::string& source) {
  std::istringstream in(text_in);
  std::string line;
  std::vector<std::string> header;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    for (auto& h : text::split(t, ',')) header.emplace_back(text::trim(h));
    break;
  }
  if (header.empty()) throw IngestionError(source + ": no header line");

  auto find_col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw IngestionError(source + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::size_t> pred_idx;
  for (const auto& p : schema.predictors) pred_idx.push_back(find_col(p));
  const std::size_t resp_idx = find_col(schema.response);
  const bool has_split = !schema.split_column.empty();
  const std::size_t split_idx = has_split ? find_col(schema.split_column) : 0;

  std::vector<std::vector<double>> rows;
  std::vector<double> ys;
  std::vector<char> tags;
  int data_row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    ++data_row;
    const auto cells = text::split(t, ',');
    const std::string where = source + ": row " + std::to_string(data_row) + " (line " +
                              std::to_string(line_no) + ")";
    if (cells.size() != header.size()) {
      throw IngestionError(where + ": expected " + std::to_string(header.size()) + " cells, found " +
                           std::to_string(cells.size()));
    }
    auto number = [&](std::size_t c) {
      const std::string cell(text::trim(cells[c]));
      if (cell.empty() || cell == "NA" || cell == "?") {
        throw IngestionError(where + ", column '" + header[c] + "': missing value");
      }
      try {
        return text::parse_double(cell, header[c]);
      } catch (const ConfigError&) {
        throw IngestionError(where + ", column '" + header[c] + "': cannot parse '" + cell +
                             "' as a number");
      }
    };
    std::vector<double> r;
    for (std::size_t c : pred_idx) r.push_back(number(c));
    rows.push_back(std::move(r));
    ys.push_back(number(resp_idx));
    if (has_split) {
      const std::string tag(text::trim(cells[split_idx]));
      if (tag != "train" && tag != "test") {
        throw IngestionError(where + ", column '" + header[split_idx] + "': expected train or test, got '" +
                             tag + "'");
      }
      tags.push_back(tag == "train" ? 1 : 0);
    } else {
      tags.push_back(1);
    }
  }
  if (rows.empty()) throw IngestionError(source + ": dataset is empty (header only)");

  Dataset d;
  d.names = schema.predictors;
  d.response_name = schema.response;
  d.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(pred_idx.size()));
  d.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < pred_idx.size(); ++j) {
      d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    d.y(static_cast<Eigen::Index>(i)) = ys[i];
  }
  d.transforms.assign(pred_idx.size(), {});
  d.train = std::move(tags);
  return d;
}

Dataset load_csv(const std::string& path, const Schema& schema) {
  std::ifstream f(path);
  if (!f) throw IngestionError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_csv(buf.str(), schema, path);
}

namespace {

bool listed(const std::vector<std::string>& list, const std::string& name) {
  return std::find(list.begin(), list.end(), name) != list.end();
}

void transform_column(Eigen::Ref<Eigen::VectorXd> col, ColumnTransform& t, const std::string& name,
                      bool log, bool center, const std::vector<char>& train) {
  if (t.log || t.center) throw ConfigError("column '" + name + "' is already transformed");
  if (log) {
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      if (!(col(i) > 0.0)) {
        throw IngestionError("column '" + name + "', row " + std::to_string(i + 1) +
                             ": log transform needs a positive value, got " +
                             text::format_double(col(i)));
      }
      col(i) = std::log(col(i));
    }
    t.log = true;
  }
  if (center) {
    double acc = 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      if (train[static_cast<std::size_t>(i)]) {
        acc += col(i);
        ++count;
      }
    }
    if (count == 0) throw ConfigError("cannot center column '" + name + "': no training rows");
    t.offset = acc / static_cast<double>(count);
    col.array() -= t.offset;
    t.center = true;
  }
}

}  // namespace

Dataset prepare(const Dataset& data, const TransformSpec& spec) {
  for (const auto& name : spec.log) {
    if (name != data.response_name) data.column(name);
  }
  for (const auto& name : spec.center) {
    if (name != data.response_name) data.column(name);
  }
  Dataset out = data;
  for (std::size_t j = 0; j < out.names.size(); ++j) {
    const auto& name = out.names[j];
    transform_column(out.x.col(static_cast<Eigen::Index>(j)), out.transforms[j], name,
                     listed(spec.log, name), listed(spec.center, name), out.train);
  }
  transform_column(out.y, out.response_transform, out.response_name,
                   listed(spec.log, out.response_name), listed(spec.center, out.response_name),
                   out.train);
  return out;
}

double invert_response(const ColumnTransform& t, double value) {
  double v = value + (t.center ? t.offset : 0.0);
  return t.log ? std::exp(v) : v;
}

Dataset invert(const Dataset& data) {
  Dataset out = data;
  for (std::size_t j = 0; j < out.names.size(); ++j) {
    auto col = out.x.col(static_cast<Eigen::Index>(j));
    for (Eigen::Index i = 0; i < col.size(); ++i) col(i) = invert_response(out.transforms[j], col(i));
    out.transforms[j] = {};
  }
  for (Eigen::Index i = 0; i < out.y.size(); ++i) out.y(i) = invert_response(out.response_transform, out.y(i));
  out.response_transform = {};
  return out;
}

Dataset split(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("split fraction must lie in (0, 1]");
  const auto n = static_cast<std::size_t>(data.rows());
  const auto n_train = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = substream(seed, 0x5b1d);
  std::shuffle(order.begin(), order.end(), rng);
  Dataset out = data;
  out.train.assign(n, 0);
  for (std::size_t i = 0; i < n_train; ++i) out.train[order[i]] = 1;
  return out;
}

Dataset synth_gp_dataset(const SynthGpOptions& o) {
  if (o.width < 1 || o.height < 1) throw ConfigError("synthetic lattice must be non-empty");
  if (o.test_columns < 0 || o.test_columns >= o.height) {
    throw ConfigError("test_columns must lie in [0, height)");
  }
  if (!(o.eta > 0.0 && o.nu1 > 0.0 && o.nu2 > 0.0 && o.sigma >= 0.0)) {
    throw DomainError("synthetic GP needs eta, nu1, nu2 > 0 and sigma >= 0");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(o.width) * o.height;
  Dataset d;
  d.names = {"x1", "x2"};
  d.response_name = "y";
  d.x.resize(n, 2);
  d.train.assign(static_cast<std::size_t>(n), 1);
  Eigen::Index r = 0;
  for (int a = 0; a < o.width; ++a) {
    for (int b = 0; b < o.height; ++b, ++r) {
      d.x(r, 0) = a;
      d.x(r, 1) = b;
      if (b >= o.height - o.test_columns) d.train[static_cast<std::size_t>(r)] = 0;
    }
  }
  const gp::Hyper h{o.beta, o.eta, o.nu1, o.nu2, o.sigma};
  const gp::Factorization f = gp::factorize(d.x, h, 1e-6);
  Eigen::VectorXd z(n);
  Rng rng = substream(o.seed, 0x6a7e);
  fill_standard_normal(rng, {z.data(), static_cast<std::size_t>(n)});
  d.y = Eigen::VectorXd::Constant(n, o.beta) + f.llt.matrixL() * z;
  d.transforms.assign(2, {});
  return d;
}

std::string to_csv(const Dataset& data, bool with_split) {
  std::ostringstream out;
  for (const auto& n : data.names) out << n << ',';
  out << data.response_name;
  if (with_split) out << ",split";
  out << '\n';
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) out << text::format_double(data.x(i, j)) << ',';
    out << text::format_double(data.y(i));
    if (with_split) out << ',' << (data.train[static_cast<std::size_t>(i)] ? "train" : "test");
    out << '\n';
  }
  return out.str();
}

}  // namespace vbma
