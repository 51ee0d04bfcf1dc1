#include "vbma/families.hpp"

#include <sstream>

#include "vbma/text.hpp"

namespace vbma {

const char* family_name(Family f) { return f == Family::LogNormal ? "lognormal" : "normal"; }

Family parse_family(const std::string& name) {
  if (name == "normal") return Family::Normal;
  if (name == "lognormal") return Family::LogNormal;
  throw ConfigError("unknown variational family '" + name + "'");
}

double encode_scale(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw DomainError("encode_scale: scale must be positive and finite, got " +
                      text::format_double(scale));
  }
  return softplus_inverse(scale);
}

VariationalState::VariationalState(const ParamLayout& layout, double initial_variance) {
  const double raw = encode_scale(initial_variance);
  for (const auto& p : layout) {
    names.push_back(p.name);
    families.push_back(p.family);
    location.push_back(0.0);
    raw_scale.push_back(raw);
  }
}

ParamLayout VariationalState::layout() const {
  ParamLayout out;
  for (std::size_t i = 0; i < size(); ++i) out.push_back({names[i], families[i]});
  return out;
}

std::vector<double> VariationalState::packed() const {
  std::vector<double> out(location);
  out.insert(out.end(), raw_scale.begin(), raw_scale.end());
  return out;
}

void VariationalState::unpack(std::span<const double> packed) {
  if (packed.size() != 2 * size()) {
    throw DimensionError("VariationalState::unpack: expected " + std::to_string(2 * size()) +
                         " values, got " + std::to_string(packed.size()));
  }
  std::copy(packed.begin(), packed.begin() + size(), location.begin());
  std::copy(packed.begin() + size(), packed.end(), raw_scale.begin());
}

std::vector<double> reparam_sample(const VariationalState& state, std::span<const double> z) {
  return reparam_transform<double>(state.location, state.raw_scale, state.families, z);
}

std::string to_text(const VariationalState& state) {
  std::string out;
  for (std::size_t i = 0; i < state.size(); ++i) {
    out += state.names[i] + " = " + family_name(state.families[i]) + " " +
           text::format_double(state.location[i]) + " " +
           text::format_double(state.raw_scale[i]) + "\n";
  }
  return out;
}

VariationalState variational_state_from_text(const std::string& block) {
  VariationalState state;
  std::istringstream in(block);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("variational state line " + std::to_string(line_no) + ": missing '='");
    }
    std::istringstream fields{std::string(body.substr(eq + 1))};
    std::string family, mu, raw, extra;
    if (!(fields >> family >> mu >> raw) || (fields >> extra)) {
      throw ConfigError("variational state line " + std::to_string(line_no) +
                        ": expected '<name> = <family> <location> <raw_scale>'");
    }
    const std::string context = "variational state line " + std::to_string(line_no);
    state.names.emplace_back(text::trim(body.substr(0, eq)));
    state.families.push_back(parse_family(family));
    state.location.push_back(text::parse_double(mu, context));
    state.raw_scale.push_back(text::parse_double(raw, context));
  }
  return state;
}

}  // namespace vbma
