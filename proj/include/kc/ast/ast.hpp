#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kc/ast/lexer.hpp"

namespace kc::ast {

// Node kind names. Interior nodes are named after the grammar production;
// leaves are named after the token category as refined by the parser
// (an identifier in type position becomes TypeName, a called or declared
// method name becomes MethodName, a primitive type keyword PrimitiveType).
namespace kind {
inline constexpr std::string_view kIdentifier = "Identifier";
inline constexpr std::string_view kMethodName = "MethodName";
inline constexpr std::string_view kTypeName = "TypeName";
inline constexpr std::string_view kPrimitiveType = "PrimitiveType";
inline constexpr std::string_view kKeyword = "Keyword";
inline constexpr std::string_view kOperator = "Operator";
inline constexpr std::string_view kSeparator = "Separator";
inline constexpr std::string_view kIntegerLiteral = "IntegerLiteral";
inline constexpr std::string_view kFloatingLiteral = "FloatingLiteral";
inline constexpr std::string_view kStringLiteral = "StringLiteral";
inline constexpr std::string_view kCharLiteral = "CharLiteral";
inline constexpr std::string_view kBooleanLiteral = "BooleanLiteral";
inline constexpr std::string_view kNullLiteral = "NullLiteral";
}  // namespace kind

struct AstNode {
  std::string kind;
  std::vector<AstNode> children;
  Span span;
  std::optional<std::string> token_text;  // leaves only

  bool is_leaf() const { return children.empty() && token_text.has_value(); }
};

// Pre-order traversal; the callback receives each node and its depth (root = 0).
void visit_preorder(const AstNode& root,
                    const std::function<void(const AstNode&, int depth)>& fn);

// Leaves in source order.
std::vector<const AstNode*> leaves(const AstNode& root);

std::size_t count_nodes(const AstNode& root);
// Number of levels in the tree: 1 for a lone leaf.
int tree_depth(const AstNode& root);

// Pre-order list of node kinds; used to compare fragments structurally.
std::vector<std::string> kind_sequence(const AstNode& root);

std::string dump_tree(const AstNode& root);

}  // namespace kc::ast
