#pragma once

#include <string_view>

#include "kc/common/io.hpp"

namespace kc::pipeline {

// Reads the subset of TOML the config needs: `[table]` and `[a.b]` headers,
// `key = value` pairs with basic strings, integers, floats, booleans and
// single-line arrays of those, and `#` comments. Anything else is a
// ConfigError naming the line.
Json parse_toml(std::string_view text);

}  // namespace kc::pipeline
