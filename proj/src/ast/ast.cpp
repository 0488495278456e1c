#include "kc/ast/ast.hpp"

#include <algorithm>

namespace kc::ast {

namespace {

void visit_impl(const AstNode& node, int depth,
                const std::function<void(const AstNode&, int)>& fn) {
  fn(node, depth);
  for (const auto& child : node.children) visit_impl(child, depth + 1, fn);
}

}  // namespace

void visit_preorder(const AstNode& root, const std::function<void(const AstNode&, int)>& fn) {
  visit_impl(root, 0, fn);
}

std::vector<const AstNode*> leaves(const AstNode& root) {
  std::vector<const AstNode*> out;
  visit_preorder(root, [&](const AstNode& n, int) {
    if (n.is_leaf()) out.push_back(&n);
  });
  return out;
}

std::size_t count_nodes(const AstNode& root) {
  std::size_t n = 1;
  for (const auto& c : root.children) n += count_nodes(c);
  return n;
}

int tree_depth(const AstNode& root) {
  int d = 0;
  for (const auto& c : root.children) d = std::max(d, tree_depth(c));
  return d + 1;
}

std::vector<std::string> kind_sequence(const AstNode& root) {
  std::vector<std::string> out;
  visit_preorder(root, [&](const AstNode& n, int) { out.push_back(n.kind); });
  return out;
}

std::string dump_tree(const AstNode& root) {
  std::string out;
  visit_preorder(root, [&](const AstNode& n, int depth) {
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    out += n.kind;
    if (n.token_text) out += " '" + *n.token_text + "'";
    out += " [" + std::to_string(n.span.begin) + "," + std::to_string(n.span.end) + ")\n";
  });
  return out;
}

}  // namespace kc::ast
