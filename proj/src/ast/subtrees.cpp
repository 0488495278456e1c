#include "kc/ast/subtrees.hpp"

#include <array>

#include "kc/ast/parser.hpp"
#include "kc/common/error.hpp"

namespace kc::ast {

namespace {

constexpr std::array<std::string_view, 13> kEligibleKinds = {
    "BinaryExpression",    "UnaryExpression",          "Condition",
    "Assignment",          "LocalVariableDeclaration", "IfStatement",
    "ForStatement",        "EnhancedForStatement",     "WhileStatement",
    "DoStatement",         "ReturnStatement",          "ForHeader",
    "ExpressionStatement"};

std::string_view placeholder_for_leaf(const AstNode& leaf) {
  const std::string& k = leaf.kind;
  if (k == kind::kIdentifier) return placeholder::kVar;
  if (k == kind::kMethodName) return placeholder::kCall;
  if (k == kind::kTypeName || k == kind::kPrimitiveType) return placeholder::kType;
  if (k == kind::kIntegerLiteral || k == kind::kFloatingLiteral) return placeholder::kNum;
  if (k == kind::kStringLiteral || k == kind::kCharLiteral) return placeholder::kStr;
  return {};
}

struct Walker {
  std::size_t min_nodes, max_nodes;
  std::vector<Subtree>* out;

  // Returns (node_count, depth) of `n`; appends eligible subtrees pre-order.
  std::pair<std::size_t, int> walk(const AstNode& n) {
    const std::size_t slot = out->size();
    const bool eligible = is_eligible_kind(n.kind);
    if (eligible) out->push_back(Subtree{&n, 0, 0, n.span});
    std::size_t count = 1;
    int depth = 0;
    for (const auto& c : n.children) {
      auto [cc, cd] = walk(c);
      count += cc;
      depth = std::max(depth, cd);
    }
    depth += 1;
    if (eligible) {
      if (count >= min_nodes && count <= max_nodes) {
        (*out)[slot].node_count = count;
        (*out)[slot].depth = depth;
      } else {
        out->erase(out->begin() + static_cast<std::ptrdiff_t>(slot));
      }
    }
    return {count, depth};
  }
};

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r\f\v") == std::string_view::npos;
}

}  // namespace

bool is_placeholder(std::string_view token) {
  return token == placeholder::kVar || token == placeholder::kNum ||
         token == placeholder::kStr || token == placeholder::kCall ||
         token == placeholder::kType;
}

bool is_eligible_kind(std::string_view kind) {
  for (auto k : kEligibleKinds)
    if (k == kind) return true;
  return false;
}

std::vector<Subtree> extract_subtrees(const AstNode& root, std::size_t min_nodes,
                                      std::size_t max_nodes) {
  if (min_nodes < 1 || min_nodes > max_nodes)
    throw UsageError("subtree bounds require 1 <= min_nodes <= max_nodes");
  std::vector<Subtree> out;
  Walker{min_nodes, max_nodes, &out}.walk(root);
  return out;
}

NormalizedSubtree normalize_subtree(const Subtree& subtree) {
  if (subtree.root == nullptr) throw UsageError("normalize_subtree: null subtree root");
  NormalizedSubtree n;
  n.kind = subtree.root->kind;
  n.span = subtree.source_span;
  for (const AstNode* leaf : leaves(*subtree.root)) {
    const auto ph = placeholder_for_leaf(*leaf);
    if (ph.empty()) {
      n.tokens.push_back(*leaf->token_text);
    } else {
      n.tokens.emplace_back(ph);
      n.placeholder_map.emplace(*leaf->token_text, std::string(ph));
    }
  }
  return n;
}

std::vector<std::string> normalize_tokens(std::span<const std::string> tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (is_placeholder(t)) {
      out.push_back(t);
      continue;
    }
    const auto lexed = tokenize(t);
    if (lexed.size() != 2) {  // one token + EndOfInput
      out.push_back(t);
      continue;
    }
    switch (lexed.front().kind) {
      case TokenKind::Identifier: out.emplace_back(placeholder::kVar); break;
      case TokenKind::IntegerLiteral:
      case TokenKind::FloatingLiteral: out.emplace_back(placeholder::kNum); break;
      case TokenKind::StringLiteral:
      case TokenKind::CharLiteral: out.emplace_back(placeholder::kStr); break;
      default: out.push_back(t); break;
    }
  }
  return out;
}

std::string snippet_for(Span span, std::string_view source) {
  if (span.begin > span.end || span.end > source.size())
    throw DataError("snippet span [" + std::to_string(span.begin) + "," +
                    std::to_string(span.end) + ") outside source of " +
                    std::to_string(source.size()) + " bytes");
  std::string_view text = source.substr(span.begin, span.end - span.begin);
  while (!text.empty()) {
    const auto nl = text.find('\n');
    if (nl == std::string_view::npos || !is_blank(text.substr(0, nl))) break;
    text.remove_prefix(nl + 1);
  }
  while (!text.empty()) {
    const auto nl = text.rfind('\n');
    if (nl == std::string_view::npos || !is_blank(text.substr(nl + 1))) break;
    text.remove_suffix(text.size() - nl);
  }
  return std::string(text);
}

std::string snippet_for(const Subtree& subtree, std::string_view source) {
  return snippet_for(subtree.source_span, source);
}

Json to_json(const NormalizedSubtree& n) {
  return Json{{"tokens", n.tokens}, {"span", {n.span.begin, n.span.end}}, {"kind", n.kind}};
}

NormalizedSubtree normalized_from_json(const Json& j) {
  try {
    NormalizedSubtree n;
    n.tokens = j.at("tokens").get<std::vector<std::string>>();
    const auto& sp = j.at("span");
    n.span = {sp.at(0).get<std::size_t>(), sp.at(1).get<std::size_t>()};
    n.kind = j.at("kind").get<std::string>();
    return n;
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed normalized subtree: ") + e.what());
  }
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::vector<NormalizedSubtree> normalized_subtrees(std::string_view source, SubtreeBounds b) {
  const AstNode root = parse_program(source);
  std::vector<NormalizedSubtree> out;
  for (const auto& s : extract_subtrees(root, b)) out.push_back(normalize_subtree(s));
  return out;
}

}  // namespace kc::ast
