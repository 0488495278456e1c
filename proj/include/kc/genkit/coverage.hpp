#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kc/ast/subtrees.hpp"
#include "kc/genkit/types.hpp"

namespace kc::genkit {

struct TargetCoverage {
  std::size_t kc_id = 0;
  bool in_code = false;
  bool in_text = false;
};

struct CoverageReport {
  std::vector<TargetCoverage> targets;  // same order as the input targets
  std::optional<std::string> warning;   // set when the step code did not parse
};

// Lowercased alphanumeric words minus stop words, with a trailing plural
// "s" dropped from words longer than three letters (but not from "ss").
std::vector<std::string> content_words(std::string_view text);

// True when at least half of the label's content words occur in `text`.
bool mentions_label(std::string_view label, std::string_view text);

// True when some subtree equals the pattern, or when a subtree at most three
// times the pattern's length (a statement, if the pattern is one) contains
// every operator and keyword of the pattern other than `=` and at least
// three quarters of its distinct non-punctuation tokens. Relational
// operators are treated as one class and == / != as another, so a corrected
// comparison still counts as the same pattern.
bool pattern_present(const KcLabel& target, std::span<const ast::NormalizedSubtree> subtrees);

// Normalized subtrees of the concatenated step code, parsed as a program and
// then as a statement list. Returns nullopt when neither parses.
std::optional<std::vector<ast::NormalizedSubtree>> step_code_subtrees(const WorkedExample& example);

// Advisory pre-screen for the KC coverage rubric item. in_text: the
// overview or some step explanation mentions the label; in_code: the
// target's supporter pattern occurs in the step code. Unparseable step code
// makes every in_code false and sets the warning. UsageError when targets
// is empty.
CoverageReport kc_coverage_heuristic(const WorkedExample& example, std::span<const KcLabel> targets);

Json to_json(const CoverageReport& r);

}  // namespace kc::genkit
