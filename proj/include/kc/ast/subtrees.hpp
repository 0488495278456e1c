#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kc/ast/ast.hpp"
#include "kc/common/io.hpp"

namespace kc::ast {

// A rooted fragment of a parsed tree. `root` points into a tree owned by the
// caller; the tree must outlive the Subtree and must not be moved.
struct Subtree {
  const AstNode* root = nullptr;
  int depth = 0;
  std::size_t node_count = 0;
  Span source_span;
};

struct NormalizedSubtree {
  std::vector<std::string> tokens;
  std::string kind;  // root kind of the origin subtree
  Span span;         // origin subtree's source span
  std::map<std::string, std::string> placeholder_map;  // display only

  bool operator==(const NormalizedSubtree& o) const {
    return tokens == o.tokens && kind == o.kind && span == o.span;
  }
};

// Placeholder classes substituted for raw identifiers and literals.
namespace placeholder {
inline constexpr std::string_view kVar = "VAR";
inline constexpr std::string_view kNum = "NUM";
inline constexpr std::string_view kStr = "STR";
inline constexpr std::string_view kCall = "CALL";
inline constexpr std::string_view kType = "TYPE";
}  // namespace placeholder

bool is_placeholder(std::string_view token);

struct SubtreeBounds {
  std::size_t min_nodes = 3;
  std::size_t max_nodes = 60;
};

inline constexpr std::size_t kUnboundedNodes = std::numeric_limits<std::size_t>::max();

// Root kinds a candidate subtree may have: expressions, conditions,
// assignments, declarations, control statements and loop headers.
bool is_eligible_kind(std::string_view kind);

// Every eligible rooted fragment with node_count in [min_nodes, max_nodes],
// in pre-order. Nested fragments are all retained.
std::vector<Subtree> extract_subtrees(const AstNode& root, std::size_t min_nodes,
                                      std::size_t max_nodes);
inline std::vector<Subtree> extract_subtrees(const AstNode& root, SubtreeBounds b = {}) {
  return extract_subtrees(root, b.min_nodes, b.max_nodes);
}

// Identifiers -> VAR, numeric literals -> NUM, string/char literals -> STR,
// method names -> CALL, type names (primitive or not) -> TYPE. Keywords,
// operators, punctuation, and boolean/null literals are kept verbatim.
NormalizedSubtree normalize_subtree(const Subtree& subtree);

// Token-level normalizer over already-lexed token text. Placeholder tokens
// map to themselves, so this is the identity on normalize_subtree output.
std::vector<std::string> normalize_tokens(std::span<const std::string> tokens);

// parse_program, extract_subtrees and normalize_subtree in one step.
std::vector<NormalizedSubtree> normalized_subtrees(std::string_view source, SubtreeBounds b = {});

// Exact source bytes of the subtree's span with leading and trailing blank
// lines removed. Throws DataError if the span is outside `source`.
std::string snippet_for(const Subtree& subtree, std::string_view source);
std::string snippet_for(Span span, std::string_view source);

Json to_json(const NormalizedSubtree& n);
NormalizedSubtree normalized_from_json(const Json& j);

std::string join_tokens(std::span<const std::string> tokens);

}  // namespace kc::ast
