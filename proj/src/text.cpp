#include "vbma/text.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>

#include "vbma/errors.hpp"

namespace vbma::text {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view token, std::string_view context) {
  token = trim(token);
  if (token == "nan") return NAN;
  if (token == "inf") return INFINITY;
  if (token == "-inf") return -INFINITY;
  double value = 0.0;
  const char* end = token.data() + token.size();
  // from_chars rejects a leading '+', which CSV writers sometimes emit.
  const char* begin = (!token.empty() && token.front() == '+') ? token.data() + 1 : token.data();
  const auto res = std::from_chars(begin, end, value);
  if (token.empty() || res.ec != std::errc() || res.ptr != end) {
    throw ConfigError(std::string(context) + ": cannot parse '" + std::string(token) +
                      "' as a number");
  }
  return value;
}

long long parse_int(std::string_view token, std::string_view context) {
  token = trim(token);
  long long value = 0;
  const char* end = token.data() + token.size();
  const auto res = std::from_chars(token.data(), end, value);
  if (token.empty() || res.ec != std::errc() || res.ptr != end) {
    throw ConfigError(std::string(context) + ": cannot parse '" + std::string(token) +
                      "' as an integer");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view s, char delimiter) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(delimiter, start);
    out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string fingerprint(std::string_view content) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : content) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace vbma::text
