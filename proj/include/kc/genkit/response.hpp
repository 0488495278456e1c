#pragma once

#include <span>
#include <string>
#include <string_view>

#include "kc/genkit/types.hpp"

namespace kc::genkit {

// Expects a `LABEL:` line and a `DESC:` line (tags case-insensitive; the
// description may wrap onto following lines). The label must have 2-6
// words and the description must be one sentence of at most 300 characters
// ending in a period. Violations throw DataError. kc_id is left at 0.
KcLabel parse_enrichment_response(std::string_view text);

// Throws DataError unless the label and description satisfy the bounds
// above.
void validate_label(const KcLabel& label);

// Parses the tagged layout
//   QUESTION: ...
//   OVERVIEW: ...
//   STEP n: explanation
//   ```lang
//   code
//   ```
// Tags are case-insensitive and steps must be numbered 1, 2, ... Throws
// DataError for fewer than 3 or more than 10 steps, a step with no code or
// no explanation, or text outside this layout.
WorkedExample parse_worked_example(std::string_view text, Variant variant, std::span<const KcLabel> targets);

// Inverse of parse_worked_example for examples whose fields are trimmed and
// contain no tag or fence lines.
std::string render_worked_example(const WorkedExample& w);

}  // namespace kc::genkit
