#pragma once

#include <cstdint>
#include <compare>
#include <string>
#include <string_view>

namespace kc {

// UTC instant with millisecond precision.
struct Timestamp {
  std::int64_t epoch_ms = 0;
  auto operator<=>(const Timestamp&) const = default;
};

// Accepts `YYYY-MM-DDTHH:MM:SS[.fff]Z` (the `T` may be a space, the fraction
// has 1-3 digits, and a trailing `Z` or `+00:00` is optional). Throws
// DataError on anything else.
Timestamp parse_timestamp(std::string_view text);

// Always emits `YYYY-MM-DDTHH:MM:SS.fffZ`.
std::string format_timestamp(Timestamp ts);

}  // namespace kc
