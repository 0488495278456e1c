#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "kc/ast/parser.hpp"
#include "kc/ast/subtrees.hpp"
#include "kc/common/io.hpp"
#include "kc/common/rng.hpp"

using namespace kc;
using namespace kc::ast;

namespace {

std::string fixture(const std::string& name) {
  return read_file(std::filesystem::path(KC_FIXTURE_DIR) / "java" / name);
}

std::string in_shell(const std::string& body) {
  return "class Shell {\n  void shell(int[] nums, int i) {\n" + body + "\n  }\n}\n";
}

bool has_kind(const AstNode& root, std::string_view kind) {
  bool found = false;
  visit_preorder(root, [&](const AstNode& n, int) { found = found || n.kind == kind; });
  return found;
}

std::string first_statement_tokens(const std::string& stmt) {
  const AstNode list = parse_statements(stmt);
  const AstNode& s = list.children.front();
  Subtree st{&s, tree_depth(s), count_nodes(s), s.span};
  return join_tokens(normalize_subtree(st).tokens);
}

// Independent leaf scan: every leaf is exactly its source bytes, leaves come
// in source order, and the gaps between them hold only whitespace/comments.
void check_round_trip(const std::string& src, const AstNode& root) {
  std::size_t prev_end = 0;
  std::string rebuilt;
  for (const AstNode* leaf : leaves(root)) {
    REQUIRE(leaf->span.begin >= prev_end);
    CHECK(src.substr(leaf->span.begin, leaf->span.end - leaf->span.begin) == *leaf->token_text);
    rebuilt += src.substr(prev_end, leaf->span.begin - prev_end);
    rebuilt += *leaf->token_text;
    prev_end = leaf->span.end;
  }
  rebuilt += src.substr(prev_end);
  CHECK(rebuilt == src);
}

void check_nesting(const AstNode& n) {
  for (const auto& c : n.children) {
    CHECK(c.span.begin >= n.span.begin);
    CHECK(c.span.end <= n.span.end);
    check_nesting(c);
  }
  if (n.token_text) CHECK(n.children.empty());
}

}  // namespace

TEST_CASE("parse_program round-trips leaf text to source bytes") {
  const std::string src = in_shell("    int x = 5; // five\n");
  const AstNode root = parse_program(src);
  CHECK(root.kind == "CompilationUnit");
  check_round_trip(src, root);
  check_nesting(root);
}

TEST_CASE("parse_program reports the first syntax error location") {
  const std::string src = in_shell("int x = ;");
  try {
    parse_program(src);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(src[e.offset()] == ';');
    CHECK(e.line() == 3);
  }
}

TEST_CASE("the fix45 excerpt parses with if and for nodes") {
  const std::string src = in_shell(fixture("fix45_excerpt.java"));
  const AstNode root = parse_program(src);
  CHECK(has_kind(root, "IfStatement"));
  CHECK(has_kind(root, "ForStatement"));
  check_round_trip(src, root);
}

TEST_CASE("parser handles common course-submission constructs") {
  const char* sources[] = {
      "public String repeatEnd(String str, int n) {\n"
      "  String end = str.substring(str.length() - n);\n"
      "  String out = \"\";\n"
      "  for (int i = 0; i < n; i++) out += end;\n"
      "  return out;\n}\n",
      "import java.util.*;\npublic class A extends B implements C<D>, E {\n"
      "  private static final int MAX = 10;\n"
      "  private Map<String, List<Integer>> m = new HashMap<>();\n"
      "  public A() { super(); }\n"
      "  @Override public <T extends Comparable<T>> T f(T... xs) throws Exception {\n"
      "    List<List<Integer>> nested = new ArrayList<List<Integer>>();\n"
      "    int[][] grid = new int[3][4];\n    int[] lit = {1, 2, 3};\n"
      "    double avg = (double) sum / count;\n    String s = (String) o;\n"
      "    label: for (String w : words) { if (w == null) continue label; }\n"
      "    do { i--; } while (i > 0 && !done);\n"
      "    switch (x) { case 1: case 2: y = 3; break; default: y = x > 2 ? 1 : 0; }\n"
      "    try { f(); } catch (IllegalStateException | IllegalArgumentException e) {"
      " throw new RuntimeException(e); } finally { x <<= 1; }\n"
      "    boolean b = o instanceof String && i >>> 2 > 0;\n"
      "    return xs[0];\n  }\n}\n",
      "int f(int a) { return a >> 1 > 0 ? -a : ~a + +a; }",
  };
  for (const char* s : sources) {
    const std::string src = s;
    AstNode root;
    REQUIRE_NOTHROW(root = parse_program(src));
    check_round_trip(src, root);
    check_nesting(root);
  }
}

TEST_CASE("extract_subtrees on a single-statement method") {
  const std::string src = "void f() { count++; }";
  const AstNode root = parse_program(src);
  const auto subs = extract_subtrees(root, 1, kUnboundedNodes);
  REQUIRE(subs.size() == 2);
  CHECK(subs[0].root->kind == "ExpressionStatement");
  CHECK(snippet_for(subs[0], src) == "count++;");
  CHECK(subs[1].root->kind == "UnaryExpression");
  CHECK(subs[0].node_count == 5);
  CHECK(subs[0].depth == 3);
}

TEST_CASE("extract_subtrees with no upper bound yields one subtree per eligible root") {
  const std::string src = in_shell(fixture("fix45_excerpt.java"));
  const AstNode root = parse_program(src);
  // Brute-force walk with a hand-written kind list.
  const std::set<std::string> eligible = {
      "BinaryExpression", "UnaryExpression", "Condition", "Assignment",
      "LocalVariableDeclaration", "IfStatement", "ForStatement", "EnhancedForStatement",
      "WhileStatement", "DoStatement", "ReturnStatement", "ForHeader", "ExpressionStatement"};
  std::size_t n = 0;
  visit_preorder(root, [&](const AstNode& node, int) { n += eligible.count(node.kind); });
  const auto subs = extract_subtrees(root, 1, kUnboundedNodes);
  CHECK(subs.size() == n);
  CHECK(n > 20);
}

TEST_CASE("extract_subtrees excludes everything above max_nodes") {
  const AstNode root = parse_program("void f() { count++; }");
  CHECK(extract_subtrees(root, 1, 2).empty());
  CHECK_THROWS(extract_subtrees(root, 0, 5));
  CHECK_THROWS(extract_subtrees(root, 6, 5));
}

TEST_CASE("extract_subtrees output respects the size bounds") {
  const AstNode root = parse_program(in_shell(fixture("fix45_excerpt.java")));
  for (auto [lo, hi] : {std::pair<std::size_t, std::size_t>{3, 60}, {5, 10}, {1, 4}, {20, 200}}) {
    for (const auto& s : extract_subtrees(root, lo, hi)) {
      CHECK(s.node_count >= lo);
      CHECK(s.node_count <= hi);
      CHECK(s.node_count == count_nodes(*s.root));
      CHECK(s.depth == tree_depth(*s.root));
      CHECK(s.source_span == s.root->span);
    }
  }
}

TEST_CASE("normalize_subtree applies the placeholder rules") {
  CHECK(first_statement_tokens("int x = 5;") == "TYPE VAR = NUM ;");
  const AstNode a = parse_expression("nums[i] == 5 && nums[i-1] != 4");
  const AstNode b = parse_expression("a[j] == 9 && a[j-2] != 7");
  const auto na = normalize_subtree(Subtree{&a, tree_depth(a), count_nodes(a), a.span});
  const auto nb = normalize_subtree(Subtree{&b, tree_depth(b), count_nodes(b), b.span});
  CHECK(na.tokens == nb.tokens);
  CHECK(join_tokens(na.tokens) == "VAR [ VAR ] == NUM && VAR [ VAR - NUM ] != NUM");
  CHECK(na.placeholder_map.at("nums") == "VAR");
}

TEST_CASE("normalized forms match the hand-built equivalence table") {
  // snippet, hand-normalized tokens, hand-assigned class
  struct Row {
    const char* code;
    const char* tokens;
    int cls;
  };
  const Row rows[] = {
      {"int x = 5;", "TYPE VAR = NUM ;", 1},
      {"double total = 0.5;", "TYPE VAR = NUM ;", 1},
      {"String s = \"hi\";", "TYPE VAR = STR ;", 2},
      {"char c = 'a';", "TYPE VAR = STR ;", 2},
      {"count++;", "VAR ++ ;", 3},
      {"i++;", "VAR ++ ;", 3},
      {"sum += nums[i];", "VAR += VAR [ VAR ] ;", 4},
      {"total += arr[k];", "VAR += VAR [ VAR ] ;", 4},
      {"if (a > b) max = a;", "if ( VAR > VAR ) VAR = VAR ;", 5},
      {"if (x > y) best = x;", "if ( VAR > VAR ) VAR = VAR ;", 5},
      {"return str.substring(n);", "return VAR . CALL ( VAR ) ;", 6},
      {"return word.charAt(idx);", "return VAR . CALL ( VAR ) ;", 6},
      {"return s.length() - 1;", "return VAR . CALL ( ) - NUM ;", 7},
      {"while (i < n) i++;", "while ( VAR < VAR ) VAR ++ ;", 8},
      {"while (k < len) k++;", "while ( VAR < VAR ) VAR ++ ;", 8},
      {"for (int i = 0; i < nums.length; i++) sum += nums[i];",
       "for ( TYPE VAR = NUM ; VAR < VAR . VAR ; VAR ++ ) VAR += VAR [ VAR ] ;", 9},
      {"for (int j = 1; j < a.length; j++) t += a[j];",
       "for ( TYPE VAR = NUM ; VAR < VAR . VAR ; VAR ++ ) VAR += VAR [ VAR ] ;", 9},
      {"for (int j = 1; j <= a.length; j++) t += a[j];",
       "for ( TYPE VAR = NUM ; VAR <= VAR . VAR ; VAR ++ ) VAR += VAR [ VAR ] ;", 10},
      {"boolean done = false;", "TYPE VAR = false ;", 11},
      {"result = Math.max(result, nums[i]);",
       "VAR = VAR . CALL ( VAR , VAR [ VAR ] ) ;", 12},
  };
  std::map<std::string, std::set<int>> classes_by_form;
  std::map<int, std::set<std::string>> forms_by_class;
  for (const auto& r : rows) {
    const std::string got = first_statement_tokens(r.code);
    CHECK_MESSAGE(got == r.tokens, r.code);
    classes_by_form[got].insert(r.cls);
    forms_by_class[r.cls].insert(got);
  }
  for (const auto& [form, classes] : classes_by_form) CHECK(classes.size() == 1);
  for (const auto& [cls, forms] : forms_by_class) CHECK(forms.size() == 1);
}

TEST_CASE("normalization is idempotent on token lists") {
  const AstNode root = parse_program(in_shell(fixture("fix45_excerpt.java")));
  for (const auto& s : extract_subtrees(root)) {
    const auto n = normalize_subtree(s);
    CHECK(normalize_tokens(n.tokens) == n.tokens);
  }
  const std::vector<std::string> raw = {"x", "=", "\"a\"", "+", "3", ";"};
  CHECK(normalize_tokens(raw) == std::vector<std::string>{"VAR", "=", "STR", "+", "NUM", ";"});
}

TEST_CASE("normalized tokens are invariant under consistent renaming") {
  const std::vector<std::string> programs = {
      in_shell(fixture("fix45_excerpt.java")),
      "public String repeatEnd(String str, int n) {\n"
      "  String end = str.substring(str.length() - n);\n  String out = \"\";\n"
      "  for (int i = 0; i < n; i++) { out = out + end; }\n  return out;\n}\n",
      "int countEvens(int[] nums) { int c = 0; for (int v : nums) if (v % 2 == 0) c++;"
      " return c; }",
  };
  Rng rng(2024);
  for (const auto& src : programs) {
    const AstNode root = parse_program(src);
    std::vector<std::string> base;
    for (const auto& s : extract_subtrees(root)) base.push_back(join_tokens(normalize_subtree(s).tokens));

    for (int trial = 0; trial < 25; ++trial) {
      // Rewrite identifiers through a random injective map and replace every
      // literal with a fresh one, keeping inter-token whitespace.
      std::map<std::string, std::string> rename;
      std::string out;
      std::size_t prev = 0;
      for (const auto& tok : tokenize(src)) {
        if (tok.kind == TokenKind::EndOfInput) break;
        out += src.substr(prev, tok.span.begin - prev);
        prev = tok.span.end;
        switch (tok.kind) {
          case TokenKind::Identifier: {
            auto [it, fresh] = rename.try_emplace(tok.text, "");
            if (fresh) it->second = "id" + std::to_string(rename.size()) + "_" + std::to_string(rng.uniform_index(1000));
            out += it->second;
            break;
          }
          case TokenKind::IntegerLiteral: out += std::to_string(rng.uniform_index(100)); break;
          case TokenKind::StringLiteral: out += "\"s" + std::to_string(rng.uniform_index(50)) + "\""; break;
          default: out += tok.text; break;
        }
      }
      out += src.substr(prev);
      const AstNode renamed = parse_program(out);
      std::vector<std::string> got;
      for (const auto& s : extract_subtrees(renamed)) got.push_back(join_tokens(normalize_subtree(s).tokens));
      CHECK(got == base);
    }
  }
}

TEST_CASE("snippet_for slices the span") {
  const std::string method = "int f(int[] a) {\n  int count = 0;\n  count++;\n  return count;\n}";
  const std::string src = "\n" + method + "\n";
  const AstNode root = parse_program(src);
  bool saw_increment = false;
  for (const auto& s : extract_subtrees(root, 1, kUnboundedNodes))
    if (s.root->kind == "ExpressionStatement") {
      CHECK(snippet_for(s, src) == "count++;");
      saw_increment = true;
    }
  CHECK(saw_increment);
  const AstNode& decl = root.children.front();
  CHECK(snippet_for(decl.span, src) == method);
  CHECK(snippet_for(Span{0, src.size()}, src) == method);
  CHECK_THROWS_AS(snippet_for(Span{0, src.size() + 1}, src), DataError);
}

TEST_CASE("the fix45 condition subtree yields the mixed-operator snippet") {
  const std::string src = in_shell(fixture("fix45_excerpt.java"));
  const AstNode root = parse_program(src);
  std::set<std::string> snippets;
  for (const auto& s : extract_subtrees(root))
    if (s.root->kind == "Condition") snippets.insert(snippet_for(s, src));
  CHECK(snippets.count("i == 0 && nums[i] == 5 || nums[i] == 5 && nums[i-1] != 4") == 1);
}

TEST_CASE("snippets re-parse to structurally identical fragments") {
  const std::string src = in_shell(fixture("fix45_excerpt.java")) +
                          "class More { int g(int[] a) { int t = 0; while (t < a.length) t += 2;"
                          " for (int v : a) t -= v; return t; } }";
  const AstNode root = parse_program(src);
  for (const auto& s : extract_subtrees(root)) {
    const std::string snip = snippet_for(s, src);
    const auto want = kind_sequence(*s.root);
    const std::string& k = s.root->kind;
    if (k == "Condition") {
      CHECK(kind_sequence(parse_expression(snip)) ==
            std::vector<std::string>(want.begin() + 1, want.end()));
    } else if (k == "ForHeader") {
      const AstNode loop = parse_statements("for " + snip + " ;");
      CHECK(kind_sequence(loop.children.front().children.at(1)) == want);
    } else if (k.ends_with("Expression") || k == "Assignment") {
      CHECK(kind_sequence(parse_expression(snip)) == want);
    } else if (k == "LocalVariableDeclaration" && !snip.ends_with(";")) {
      auto got = kind_sequence(parse_statements(snip + ";").children.front());
      got.pop_back();
      CHECK(got == want);
    } else {
      CHECK(kind_sequence(parse_statements(snip).children.front()) == want);
    }
  }
}

TEST_CASE("normalized subtree JSON carries tokens, span and kind") {
  NormalizedSubtree n{{"VAR", "++"}, "UnaryExpression", {4, 9}, {}};
  const Json j = to_json(n);
  CHECK(canonical_dump(j) == R"({"kind":"UnaryExpression","span":[4,9],"tokens":["VAR","++"]})");
  CHECK(normalized_from_json(j) == n);
}
