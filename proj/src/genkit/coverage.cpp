#include "kc/genkit/coverage.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "kc/ast/parser.hpp"
#include "kc/common/error.hpp"

namespace kc::genkit {

namespace {

const std::set<std::string>& stop_words() {
  static const std::set<std::string> words{"a",    "an",   "the",  "of",   "in",  "on",   "for", "to",
                                           "and",  "or",   "with", "by",   "at",  "from", "into", "is",
                                           "are",  "using", "use", "its",  "this", "that", "as"};
  return words;
}

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    out.push_back(cur);
    cur.clear();
  };
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) cur += static_cast<char>(std::tolower(c));
    else flush();
  }
  flush();
  return out;
}

std::string stem(std::string w) {
  if (w.size() > 3 && w.back() == 's' && w[w.size() - 2] != 's') w.pop_back();
  return w;
}

bool is_punctuation(const std::string& tok) {
  static const std::set<std::string> punct{"(", ")", "{", "}", ";", ","};
  return punct.count(tok) > 0;
}

constexpr std::size_t kMaxLengthRatio = 3;

bool is_statement_kind(std::string_view kind) {
  auto ends_with = [&](std::string_view suffix) {
    return kind.size() >= suffix.size() && kind.substr(kind.size() - suffix.size()) == suffix;
  };
  return ends_with("Statement") || ends_with("Declaration");
}

// Relational operators fold to one class and equality operators to another,
// so a corrected comparison still matches the pattern it replaces.
std::string fold(const std::string& tok) {
  if (tok == "<" || tok == "<=" || tok == ">" || tok == ">=") return "<rel>";
  if (tok == "==" || tok == "!=") return "<eq>";
  return tok;
}

std::optional<std::vector<ast::NormalizedSubtree>> subtrees_of(const ast::AstNode& root) {
  std::vector<ast::NormalizedSubtree> out;
  for (const auto& s : ast::extract_subtrees(root))
    out.push_back(ast::normalize_subtree(s));
  return out;
}

}  // namespace

std::vector<std::string> content_words(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& raw : words_of(text)) {
    if (stop_words().count(raw)) continue;
    auto w = stem(raw);
    if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(std::move(w));
  }
  return out;
}

bool mentions_label(std::string_view label, std::string_view text) {
  const auto wanted = content_words(label);
  if (wanted.empty()) return false;
  std::set<std::string> present;
  for (const auto& w : words_of(text)) present.insert(stem(w));
  const auto hits = static_cast<std::size_t>(
      std::count_if(wanted.begin(), wanted.end(), [&](const std::string& w) { return present.count(w) > 0; }));
  return 2 * hits >= wanted.size();
}

bool pattern_present(const KcLabel& target, std::span<const ast::NormalizedSubtree> subtrees) {
  if (target.pattern.empty()) return false;
  std::set<std::string> needed;
  std::set<std::string> operators;
  for (const auto& t : target.pattern) {
    if (is_punctuation(t)) continue;
    needed.insert(fold(t));
    if (!ast::is_placeholder(t) && t != "=") operators.insert(fold(t));
  }
  const bool statement_pattern = is_statement_kind(target.pattern_kind);
  for (const auto& s : subtrees) {
    if (s.tokens == target.pattern) return true;
    if (statement_pattern && !is_statement_kind(s.kind)) continue;
    if (s.tokens.size() > kMaxLengthRatio * target.pattern.size()) continue;
    std::set<std::string> have;
    for (const auto& t : s.tokens) have.insert(fold(t));
    if (!std::includes(have.begin(), have.end(), operators.begin(), operators.end())) continue;
    const auto covered = static_cast<std::size_t>(
        std::count_if(needed.begin(), needed.end(), [&](const std::string& t) { return have.count(t) > 0; }));
    if (4 * covered >= 3 * needed.size()) return true;
  }
  return false;
}

std::optional<std::vector<ast::NormalizedSubtree>> step_code_subtrees(const WorkedExample& example) {
  std::string code;
  for (const auto& s : example.steps) code += s.code + "\n";
  try {
    return subtrees_of(ast::parse_program(code));
  } catch (const DataError&) {
  }
  try {
    return subtrees_of(ast::parse_statements(code));
  } catch (const DataError&) {
  }
  return std::nullopt;
}

CoverageReport kc_coverage_heuristic(const WorkedExample& example, std::span<const KcLabel> targets) {
  if (targets.empty()) throw UsageError("kc_coverage_heuristic needs at least one target");
  CoverageReport report;
  const auto subtrees = step_code_subtrees(example);
  if (!subtrees) report.warning = "worked example step code does not parse; in_code set to false";
  for (const auto& t : targets) {
    TargetCoverage c;
    c.kc_id = t.kc_id;
    c.in_text = mentions_label(t.label, example.overview) ||
                std::any_of(example.steps.begin(), example.steps.end(),
                            [&](const WorkedStep& s) { return mentions_label(t.label, s.explanation); });
    c.in_code = subtrees && pattern_present(t, *subtrees);
    report.targets.push_back(c);
  }
  return report;
}

Json to_json(const CoverageReport& r) {
  Json targets = Json::array();
  for (const auto& t : r.targets)
    targets.push_back(Json{{"kc_id", t.kc_id}, {"in_code", t.in_code}, {"in_text", t.in_text}});
  Json out{{"targets", targets}};
  if (r.warning) out["warning"] = *r.warning;
  return out;
}

}  // namespace kc::genkit
