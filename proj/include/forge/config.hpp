#pragma once

#include <filesystem>
#include <string_view>

#include "forge/manifest.hpp"

namespace forge::config {

/// Parses the TOML subset used by pipeline configs into a JSON object:
/// [table] and [a.b] headers, bare/quoted/dotted keys, basic strings with
/// escapes, literal strings, integers, floats, booleans, arrays (nested,
/// multi-line, trailing comma) and inline tables. Throws ConfigError with the
/// line number.
Json parse_toml(std::string_view text);

/// .json files go through the JSON parser, anything else through parse_toml.
Json load_file(const std::filesystem::path& path);

}  // namespace forge::config
