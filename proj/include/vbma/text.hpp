#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vbma::text {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Strict parse of a whole token; throws ConfigError naming `context` on failure.
double parse_double(std::string_view token, std::string_view context);
long long parse_int(std::string_view token, std::string_view context);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char delimiter);

/// 64-bit FNV-1a, used for config fingerprints in artifact headers.
std::string fingerprint(std::string_view content);

}  // namespace vbma::text
