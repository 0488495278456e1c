// Recursive-descent parser for the Java subset found in introductory course
// submissions: classes/interfaces/enums, fields, methods and constructors,
// every statement form except lambdas and switch expressions, and the full
// expression precedence ladder including casts, generics and array creation.

#include "kc/ast/parser.hpp"

#include <array>
#include <utility>

namespace kc::ast {

namespace {

constexpr std::array<std::string_view, 9> kPrimitiveTypes = {
    "boolean", "byte", "char", "short", "int", "long", "float", "double", "void"};

constexpr std::array<std::string_view, 12> kModifiers = {
    "public", "private",  "protected",    "static",    "final",    "abstract",
    "native", "strictfp", "synchronized", "transient", "volatile", "default"};

constexpr std::array<std::string_view, 12> kAssignOps = {
    "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& set, std::string_view s) {
  for (auto v : set)
    if (v == s) return true;
  return false;
}

int binary_precedence(const Token& t) {
  if (t.kind == TokenKind::Keyword) return t.text == "instanceof" ? 7 : 0;
  if (t.kind != TokenKind::Operator) return 0;
  const std::string& op = t.text;
  if (op == "||") return 1;
  if (op == "&&") return 2;
  if (op == "|") return 3;
  if (op == "^") return 4;
  if (op == "&") return 5;
  if (op == "==" || op == "!=") return 6;
  if (op == "<" || op == ">" || op == "<=" || op == ">=") return 7;
  if (op == "<<" || op == ">>" || op == ">>>") return 8;
  if (op == "+" || op == "-") return 9;
  if (op == "*" || op == "/" || op == "%") return 10;
  return 0;
}

std::string_view leaf_kind_for(TokenKind k) {
  switch (k) {
    case TokenKind::Identifier: return kind::kIdentifier;
    case TokenKind::Keyword: return kind::kKeyword;
    case TokenKind::IntegerLiteral: return kind::kIntegerLiteral;
    case TokenKind::FloatingLiteral: return kind::kFloatingLiteral;
    case TokenKind::StringLiteral: return kind::kStringLiteral;
    case TokenKind::CharLiteral: return kind::kCharLiteral;
    case TokenKind::BooleanLiteral: return kind::kBooleanLiteral;
    case TokenKind::NullLiteral: return kind::kNullLiteral;
    case TokenKind::Operator: return kind::kOperator;
    case TokenKind::Separator: return kind::kSeparator;
    case TokenKind::EndOfInput: break;
  }
  return kind::kSeparator;
}

class Parser {
 public:
  explicit Parser(std::string_view source) : tokens_(tokenize(source)) {}

  AstNode compilation_unit() {
    std::vector<AstNode> kids;
    if (at_word("package")) {
      std::vector<AstNode> decl;
      decl.push_back(take());
      decl.push_back(qualified_name(kind::kIdentifier));
      decl.push_back(expect(";"));
      kids.push_back(node("PackageDeclaration", std::move(decl)));
    }
    while (at_word("import")) {
      std::vector<AstNode> decl;
      decl.push_back(take());
      if (at_word("static")) decl.push_back(take());
      decl.push_back(leaf_as(kind::kTypeName, TokenKind::Identifier));
      while (at(".")) {
        decl.push_back(take());
        if (at("*")) decl.push_back(take());
        else decl.push_back(leaf_as(kind::kTypeName, TokenKind::Identifier));
      }
      decl.push_back(expect(";"));
      kids.push_back(node("ImportDeclaration", std::move(decl)));
    }
    while (!at_end()) {
      if (at(";")) {
        take();
        continue;
      }
      kids.push_back(member());
    }
    if (kids.empty()) fail("expected a declaration");
    return node("CompilationUnit", std::move(kids));
  }

  AstNode statement_list() {
    std::vector<AstNode> kids;
    while (!at_end()) kids.push_back(block_statement());
    if (kids.empty()) fail("expected a statement");
    return node("StatementList", std::move(kids));
  }

  AstNode whole_expression() {
    AstNode e = expression();
    if (!at_end()) fail("unexpected '" + cur().text + "' after expression");
    return e;
  }

 private:
  // ---- token access -------------------------------------------------------

  const Token& cur() const { return tokens_[pos_]; }
  const Token& peek(std::size_t k) const {
    const std::size_t i = pos_ + k;
    return i < tokens_.size() ? tokens_[i] : tokens_.back();
  }
  bool at_end() const { return cur().kind == TokenKind::EndOfInput; }
  bool at(std::string_view text) const {
    return (cur().kind == TokenKind::Separator || cur().kind == TokenKind::Operator) &&
           cur().text == text;
  }
  bool at_word(std::string_view w) const {
    return cur().kind == TokenKind::Keyword && cur().text == w;
  }
  bool at_identifier() const { return cur().kind == TokenKind::Identifier; }
  bool at_primitive() const {
    return cur().kind == TokenKind::Keyword && contains(kPrimitiveTypes, cur().text);
  }
  bool at_modifier() const {
    return (cur().kind == TokenKind::Keyword && contains(kModifiers, cur().text)) ||
           (at("@") && peek(1).kind == TokenKind::Identifier && peek(1).text != "interface");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = cur();
    const std::string where = t.kind == TokenKind::EndOfInput ? "end of input" : "'" + t.text + "'";
    throw ParseError(msg + " at " + where, t.line, t.column, t.span.begin);
  }

  AstNode leaf_from(const Token& t, std::string_view kind) {
    AstNode n;
    n.kind = std::string(kind);
    n.span = t.span;
    n.token_text = t.text;
    return n;
  }

  AstNode take() {
    if (at_end()) fail("unexpected end of input");
    AstNode n = leaf_from(cur(), leaf_kind_for(cur().kind));
    ++pos_;
    return n;
  }

  AstNode leaf_as(std::string_view kind, TokenKind expected) {
    if (cur().kind != expected) fail("expected identifier");
    AstNode n = leaf_from(cur(), kind);
    ++pos_;
    return n;
  }

  AstNode expect(std::string_view text) {
    if (!at(text) && !(cur().kind == TokenKind::Keyword && cur().text == text))
      fail("expected '" + std::string(text) + "'");
    return take();
  }

  static AstNode node(std::string kind, std::vector<AstNode> kids) {
    AstNode n;
    n.kind = std::move(kind);
    n.span = {kids.front().span.begin, kids.back().span.end};
    n.children = std::move(kids);
    return n;
  }

  // Splits a `>>`/`>>>`/`>=`-style token so a single `>` can close a type
  // argument list. Splits are logged so speculation can undo them.
  void split_angle() {
    Token& t = tokens_[pos_];
    Token rest = t;
    rest.text = t.text.substr(1);
    rest.span.begin += 1;
    rest.column += 1;
    t.text = ">";
    t.span.end = t.span.begin + 1;
    tokens_.insert(tokens_.begin() + static_cast<std::ptrdiff_t>(pos_) + 1, rest);
    splits_.push_back(pos_);
  }

  struct Mark {
    std::size_t pos;
    std::size_t splits;
  };
  Mark mark() const { return {pos_, splits_.size()}; }
  void reset(Mark m) {
    while (splits_.size() > m.splits) {
      const std::size_t i = splits_.back();
      splits_.pop_back();
      tokens_[i].text += tokens_[i + 1].text;
      tokens_[i].span.end = tokens_[i + 1].span.end;
      tokens_.erase(tokens_.begin() + static_cast<std::ptrdiff_t>(i) + 1);
    }
    pos_ = m.pos;
  }

  // Runs fn speculatively; on ParseError rewinds and returns false.
  template <typename Fn>
  bool attempt(Fn&& fn) {
    const Mark m = mark();
    try {
      fn();
      return true;
    } catch (const ParseError&) {
      reset(m);
      return false;
    }
  }

  // ---- declarations ---------------------------------------------------------

  AstNode qualified_name(std::string_view leaf_kind) {
    std::vector<AstNode> parts;
    parts.push_back(leaf_as(leaf_kind, TokenKind::Identifier));
    while (at(".") && peek(1).kind == TokenKind::Identifier) {
      parts.push_back(take());
      parts.push_back(leaf_as(leaf_kind, TokenKind::Identifier));
    }
    return node("QualifiedName", std::move(parts));
  }

  std::vector<AstNode> modifiers_opt() {
    std::vector<AstNode> mods;
    while (at_modifier()) {
      if (at("@")) {
        std::vector<AstNode> ann;
        ann.push_back(take());
        ann.push_back(leaf_as(kind::kTypeName, TokenKind::Identifier));
        if (at("(")) {
          std::vector<AstNode> args = arguments_children();
          for (auto& a : args) ann.push_back(std::move(a));
        }
        mods.push_back(node("Annotation", std::move(ann)));
      } else {
        mods.push_back(take());
      }
    }
    if (mods.empty()) return {};
    std::vector<AstNode> out;
    out.push_back(node("Modifiers", std::move(mods)));
    return out;
  }

  AstNode member() {
    std::vector<AstNode> kids = modifiers_opt();
    if (at_word("class") || at_word("interface") || at_word("enum") ||
        (at("@") && peek(1).text == "interface")) {
      return type_declaration(std::move(kids));
    }
    if (at("{")) {
      kids.push_back(block());
      return node("InitializerBlock", std::move(kids));
    }
    if (at("<")) kids.push_back(type_parameters());
    if (at_identifier() && peek(1).kind == TokenKind::Separator && peek(1).text == "(") {
      kids.push_back(leaf_as(kind::kTypeName, TokenKind::Identifier));
      return method_rest("ConstructorDeclaration", std::move(kids));
    }
    kids.push_back(type());
    if (at_identifier() && peek(1).kind == TokenKind::Separator && peek(1).text == "(") {
      kids.push_back(leaf_as(kind::kMethodName, TokenKind::Identifier));
      return method_rest("MethodDeclaration", std::move(kids));
    }
    variable_declarators(kids);
    kids.push_back(expect(";"));
    return node("FieldDeclaration", std::move(kids));
  }

  AstNode type_declaration(std::vector<AstNode> kids) {
    if (at("@")) kids.push_back(take());
    const bool is_enum = at_word("enum");
    kids.push_back(take());  // class / interface / enum
    kids.push_back(leaf_as(kind::kTypeName, TokenKind::Identifier));
    if (at("<")) kids.push_back(type_parameters());
    if (at_word("extends")) {
      kids.push_back(take());
      kids.push_back(type());
      while (at(",")) {
        kids.push_back(take());
        kids.push_back(type());
      }
    }
    if (at_word("implements")) {
      kids.push_back(take());
      kids.push_back(type());
      while (at(",")) {
        kids.push_back(take());
        kids.push_back(type());
      }
    }
    std::vector<AstNode> body;
    body.push_back(expect("{"));
    if (is_enum) {
      while (at_identifier()) {
        std::vector<AstNode> constant;
        constant.push_back(take());
        if (at("(")) {
          for (auto& a : arguments_children()) constant.push_back(std::move(a));
        }
        body.push_back(node("EnumConstant", std::move(constant)));
        if (!at(",")) break;
        body.push_back(take());
      }
      if (at(";")) body.push_back(take());
    }
    while (!at("}")) {
      if (at_end()) fail("expected '}'");
      if (at(";")) {
        body.push_back(take());
        continue;
      }
      body.push_back(member());
    }
    body.push_back(take());
    kids.push_back(node("ClassBody", std::move(body)));
    return node(is_enum ? "EnumDeclaration" : "ClassDeclaration", std::move(kids));
  }

  AstNode type_parameters() {
    std::vector<AstNode> kids;
    kids.push_back(expect("<"));
    for (;;) {
      std::vector<AstNode> param;
      param.push_back(leaf_as(kind::kTypeName, TokenKind::Identifier));
      if (at_word("extends")) {
        param.push_back(take());
        param.push_back(type());
        while (at("&")) {
          param.push_back(take());
          param.push_back(type());
        }
      }
      kids.push_back(node("TypeParameter", std::move(param)));
      if (!at(",")) break;
      kids.push_back(take());
    }
    close_angle(kids);
    return node("TypeParameters", std::move(kids));
  }

  AstNode method_rest(std::string kind, std::vector<AstNode> kids) {
    kids.push_back(formal_parameters());
    while (at("[")) {
      kids.push_back(take());
      kids.push_back(expect("]"));
    }
    if (at_word("throws")) {
      std::vector<AstNode> t;
      t.push_back(take());
      t.push_back(type());
      while (at(",")) {
        t.push_back(take());
        t.push_back(type());
      }
      kids.push_back(node("ThrowsClause", std::move(t)));
    }
    if (at(";")) kids.push_back(take());
    else kids.push_back(block());
    return node(std::move(kind), std::move(kids));
  }

  AstNode formal_parameters() {
    std::vector<AstNode> kids;
    kids.push_back(expect("("));
    if (!at(")")) {
      for (;;) {
        std::vector<AstNode> p = modifiers_opt();
        p.push_back(type());
        if (at("...")) p.push_back(take());
        p.push_back(leaf_as(kind::kIdentifier, TokenKind::Identifier));
        while (at("[")) {
          p.push_back(take());
          p.push_back(expect("]"));
        }
        kids.push_back(node("FormalParameter", std::move(p)));
        if (!at(",")) break;
        kids.push_back(take());
      }
    }
    kids.push_back(expect(")"));
    return node("FormalParameters", std::move(kids));
  }

  // ---- types ----------------------------------------------------------------

  void close_angle(std::vector<AstNode>& kids) {
    if (cur().kind == TokenKind::Operator && cur().text.size() > 1 && cur().text[0] == '>')
      split_angle();
    kids.push_back(expect(">"));
  }

  AstNode type_arguments() {
    std::vector<AstNode> kids;
    kids.push_back(expect("<"));
    if (!at(">")) {
      for (;;) {
        if (at("?")) {
          std::vector<AstNode> w;
          w.push_back(take());
          if (at_word("extends") || at_word("super")) {
            w.push_back(take());
            w.push_back(type());
          }
          kids.push_back(node("WildcardType", std::move(w)));
        } else {
          kids.push_back(type());
        }
        if (!at(",")) break;
        kids.push_back(take());
      }
    }
    close_angle(kids);
    return node("TypeArguments", std::move(kids));
  }

  AstNode type(bool allow_dims = true) {
    std::vector<AstNode> kids;
    if (at_primitive()) {
      kids.push_back(leaf_from(cur(), kind::kPrimitiveType));
      ++pos_;
    } else if (at_identifier()) {
      kids.push_back(leaf_as(kind::kTypeName, TokenKind::Identifier));
      if (at("<")) kids.push_back(type_arguments());
      while (at(".") && peek(1).kind == TokenKind::Identifier) {
        kids.push_back(take());
        kids.push_back(leaf_as(kind::kTypeName, TokenKind::Identifier));
        if (at("<")) kids.push_back(type_arguments());
      }
    } else {
      fail("expected a type");
    }
    while (allow_dims && at("[") && peek(1).text == "]") {
      kids.push_back(take());
      kids.push_back(take());
    }
    return node("Type", std::move(kids));
  }

  // ---- statements -----------------------------------------------------------

  AstNode block() {
    std::vector<AstNode> kids;
    kids.push_back(expect("{"));
    while (!at("}")) {
      if (at_end()) fail("expected '}'");
      kids.push_back(block_statement());
    }
    kids.push_back(take());
    return node("Block", std::move(kids));
  }

  // `Type name` followed by a declarator continuation means a declaration.
  bool looks_like_declaration() {
    if (at_primitive() || at_word("final") || at("@")) return true;
    if (!at_identifier()) return false;
    const Mark m = mark();
    bool ok = attempt([&] {
      type();
      if (!at_identifier()) fail("not a declaration");
      ++pos_;
      if (!(at("=") || at(";") || at(",") || at("[") || at(":"))) fail("not a declaration");
    });
    reset(m);
    return ok;
  }

  AstNode block_statement() {
    if (at_word("class") || at_word("interface") || at_word("enum") ||
        ((at_word("abstract") || at_word("static")) && peek(1).text == "class")) {
      return member();
    }
    if (looks_like_declaration()) {
      AstNode decl = local_variable_declaration();
      decl.children.push_back(expect(";"));
      decl.span.end = decl.children.back().span.end;
      return decl;
    }
    return statement();
  }

  // Without the trailing semicolon; callers append it where required.
  AstNode local_variable_declaration() {
    std::vector<AstNode> kids = modifiers_opt();
    kids.push_back(type());
    variable_declarators(kids);
    return node("LocalVariableDeclaration", std::move(kids));
  }

  void variable_declarators(std::vector<AstNode>& kids) {
    for (;;) {
      std::vector<AstNode> d;
      d.push_back(leaf_as(kind::kIdentifier, TokenKind::Identifier));
      while (at("[")) {
        d.push_back(take());
        d.push_back(expect("]"));
      }
      if (at("=")) {
        d.push_back(take());
        d.push_back(variable_initializer());
      }
      kids.push_back(node("VariableDeclarator", std::move(d)));
      if (!at(",")) break;
      kids.push_back(take());
    }
  }

  AstNode variable_initializer() { return at("{") ? array_initializer() : expression(); }

  AstNode array_initializer() {
    std::vector<AstNode> kids;
    kids.push_back(expect("{"));
    while (!at("}")) {
      kids.push_back(variable_initializer());
      if (!at(",")) break;
      kids.push_back(take());
    }
    kids.push_back(expect("}"));
    return node("ArrayInitializer", std::move(kids));
  }

  AstNode condition() {
    std::vector<AstNode> kids;
    kids.push_back(expression());
    return node("Condition", std::move(kids));
  }

  AstNode statement() {
    std::vector<AstNode> kids;
    if (at("{")) return block();
    if (at(";")) {
      kids.push_back(take());
      return node("EmptyStatement", std::move(kids));
    }
    if (at_identifier() && peek(1).kind == TokenKind::Operator && peek(1).text == ":") {
      kids.push_back(take());
      kids.push_back(take());
      kids.push_back(statement());
      return node("LabeledStatement", std::move(kids));
    }
    if (cur().kind == TokenKind::Keyword) {
      const std::string w = cur().text;
      if (w == "if") {
        kids.push_back(take());
        kids.push_back(expect("("));
        kids.push_back(condition());
        kids.push_back(expect(")"));
        kids.push_back(statement());
        if (at_word("else")) {
          kids.push_back(take());
          kids.push_back(statement());
        }
        return node("IfStatement", std::move(kids));
      }
      if (w == "while") {
        kids.push_back(take());
        kids.push_back(expect("("));
        kids.push_back(condition());
        kids.push_back(expect(")"));
        kids.push_back(statement());
        return node("WhileStatement", std::move(kids));
      }
      if (w == "do") {
        kids.push_back(take());
        kids.push_back(statement());
        kids.push_back(expect("while"));
        kids.push_back(expect("("));
        kids.push_back(condition());
        kids.push_back(expect(")"));
        kids.push_back(expect(";"));
        return node("DoStatement", std::move(kids));
      }
      if (w == "for") return for_statement();
      if (w == "return") {
        kids.push_back(take());
        if (!at(";")) kids.push_back(expression());
        kids.push_back(expect(";"));
        return node("ReturnStatement", std::move(kids));
      }
      if (w == "break" || w == "continue") {
        kids.push_back(take());
        if (at_identifier()) kids.push_back(take());
        kids.push_back(expect(";"));
        return node(w == "break" ? "BreakStatement" : "ContinueStatement", std::move(kids));
      }
      if (w == "throw") {
        kids.push_back(take());
        kids.push_back(expression());
        kids.push_back(expect(";"));
        return node("ThrowStatement", std::move(kids));
      }
      if (w == "assert") {
        kids.push_back(take());
        kids.push_back(expression());
        if (at(":")) {
          kids.push_back(take());
          kids.push_back(expression());
        }
        kids.push_back(expect(";"));
        return node("AssertStatement", std::move(kids));
      }
      if (w == "switch") return switch_statement();
      if (w == "try") return try_statement();
      if (w == "synchronized") {
        kids.push_back(take());
        kids.push_back(expect("("));
        kids.push_back(expression());
        kids.push_back(expect(")"));
        kids.push_back(block());
        return node("SynchronizedStatement", std::move(kids));
      }
    }
    kids.push_back(expression());
    kids.push_back(expect(";"));
    return node("ExpressionStatement", std::move(kids));
  }

  AstNode expression_list(std::string kind) {
    std::vector<AstNode> kids;
    kids.push_back(expression());
    while (at(",")) {
      kids.push_back(take());
      kids.push_back(expression());
    }
    return node(std::move(kind), std::move(kids));
  }

  AstNode for_statement() {
    std::vector<AstNode> kids;
    kids.push_back(take());  // for
    std::vector<AstNode> header;
    header.push_back(expect("("));

    // Enhanced for: `(Type name : expr)`.
    const Mark m = mark();
    bool enhanced = false;
    if (looks_like_declaration()) {
      enhanced = attempt([&] {
        std::vector<AstNode> probe = modifiers_opt();
        type();
        leaf_as(kind::kIdentifier, TokenKind::Identifier);
        if (!at(":")) fail("not an enhanced for");
      });
      reset(m);
    }
    if (enhanced) {
      std::vector<AstNode> var = modifiers_opt();
      var.push_back(type());
      std::vector<AstNode> declarator;
      declarator.push_back(leaf_as(kind::kIdentifier, TokenKind::Identifier));
      var.push_back(node("VariableDeclarator", std::move(declarator)));
      header.push_back(node("LocalVariableDeclaration", std::move(var)));
      header.push_back(take());  // :
      header.push_back(expression());
      header.push_back(expect(")"));
      kids.push_back(node("ForHeader", std::move(header)));
      kids.push_back(statement());
      return node("EnhancedForStatement", std::move(kids));
    }

    if (!at(";")) {
      std::vector<AstNode> init;
      if (looks_like_declaration()) init.push_back(local_variable_declaration());
      else init.push_back(expression_list("ExpressionList"));
      header.push_back(node("ForInit", std::move(init)));
    }
    header.push_back(expect(";"));
    if (!at(";")) header.push_back(condition());
    header.push_back(expect(";"));
    if (!at(")")) header.push_back(expression_list("ForUpdate"));
    header.push_back(expect(")"));
    kids.push_back(node("ForHeader", std::move(header)));
    kids.push_back(statement());
    return node("ForStatement", std::move(kids));
  }

  AstNode switch_statement() {
    std::vector<AstNode> kids;
    kids.push_back(take());
    kids.push_back(expect("("));
    kids.push_back(expression());
    kids.push_back(expect(")"));
    std::vector<AstNode> body;
    body.push_back(expect("{"));
    while (!at("}")) {
      if (at_end()) fail("expected '}'");
      std::vector<AstNode> group;
      while (at_word("case") || at_word("default")) {
        std::vector<AstNode> label;
        const bool is_case = at_word("case");
        label.push_back(take());
        if (is_case) {
          label.push_back(expression());
          while (at(",")) {
            label.push_back(take());
            label.push_back(expression());
          }
        }
        label.push_back(expect(":"));
        group.push_back(node("SwitchLabel", std::move(label)));
      }
      if (group.empty()) fail("expected 'case' or 'default'");
      while (!at("}") && !at_word("case") && !at_word("default")) {
        if (at_end()) fail("expected '}'");
        group.push_back(block_statement());
      }
      body.push_back(node("SwitchGroup", std::move(group)));
    }
    body.push_back(take());
    kids.push_back(node("SwitchBlock", std::move(body)));
    return node("SwitchStatement", std::move(kids));
  }

  AstNode try_statement() {
    std::vector<AstNode> kids;
    kids.push_back(take());
    if (at("(")) {
      std::vector<AstNode> res;
      res.push_back(take());
      for (;;) {
        res.push_back(local_variable_declaration());
        if (!at(";")) break;
        res.push_back(take());
        if (at(")")) break;
      }
      res.push_back(expect(")"));
      kids.push_back(node("ResourceSpecification", std::move(res)));
    }
    kids.push_back(block());
    while (at_word("catch")) {
      std::vector<AstNode> c;
      c.push_back(take());
      c.push_back(expect("("));
      std::vector<AstNode> mods = modifiers_opt();
      for (auto& m : mods) c.push_back(std::move(m));
      c.push_back(type());
      while (at("|")) {
        c.push_back(take());
        c.push_back(type());
      }
      c.push_back(leaf_as(kind::kIdentifier, TokenKind::Identifier));
      c.push_back(expect(")"));
      c.push_back(block());
      kids.push_back(node("CatchClause", std::move(c)));
    }
    if (at_word("finally")) {
      std::vector<AstNode> f;
      f.push_back(take());
      f.push_back(block());
      kids.push_back(node("FinallyClause", std::move(f)));
    }
    if (kids.size() == 2) fail("expected 'catch' or 'finally'");
    return node("TryStatement", std::move(kids));
  }

  // ---- expressions ----------------------------------------------------------

  AstNode expression() {
    AstNode lhs = conditional();
    if (cur().kind == TokenKind::Operator && contains(kAssignOps, cur().text)) {
      std::vector<AstNode> kids;
      kids.push_back(std::move(lhs));
      kids.push_back(take());
      kids.push_back(expression());
      return node("Assignment", std::move(kids));
    }
    return lhs;
  }

  AstNode conditional() {
    AstNode c = binary(1);
    if (at("?")) {
      std::vector<AstNode> kids;
      kids.push_back(std::move(c));
      kids.push_back(take());
      kids.push_back(expression());
      kids.push_back(expect(":"));
      kids.push_back(conditional());
      return node("ConditionalExpression", std::move(kids));
    }
    return c;
  }

  AstNode binary(int min_prec) {
    AstNode lhs = unary();
    for (;;) {
      const int prec = binary_precedence(cur());
      if (prec == 0 || prec < min_prec) return lhs;
      std::vector<AstNode> kids;
      kids.push_back(std::move(lhs));
      if (cur().kind == TokenKind::Keyword) {  // instanceof
        kids.push_back(take());
        kids.push_back(type());
        lhs = node("InstanceofExpression", std::move(kids));
        continue;
      }
      kids.push_back(take());
      kids.push_back(binary(prec + 1));
      lhs = node("BinaryExpression", std::move(kids));
    }
  }

  bool cast_follows() const {
    const Token& t = cur();
    switch (t.kind) {
      case TokenKind::Identifier:
      case TokenKind::IntegerLiteral:
      case TokenKind::FloatingLiteral:
      case TokenKind::StringLiteral:
      case TokenKind::CharLiteral:
      case TokenKind::BooleanLiteral:
      case TokenKind::NullLiteral:
        return true;
      case TokenKind::Keyword:
        return t.text == "this" || t.text == "new" || t.text == "super" ||
               contains(kPrimitiveTypes, t.text);
      case TokenKind::Separator:
        return t.text == "(";
      case TokenKind::Operator:
        return t.text == "!" || t.text == "~";
      case TokenKind::EndOfInput:
        break;
    }
    return false;
  }

  AstNode unary() {
    std::vector<AstNode> kids;
    if (cur().kind == TokenKind::Operator &&
        (at("+") || at("-") || at("++") || at("--") || at("!") || at("~"))) {
      kids.push_back(take());
      kids.push_back(unary());
      return node("UnaryExpression", std::move(kids));
    }
    if (at("(")) {
      const bool primitive = peek(1).kind == TokenKind::Keyword &&
                             contains(kPrimitiveTypes, peek(1).text);
      if (primitive || peek(1).kind == TokenKind::Identifier) {
        std::vector<AstNode> cast;
        const bool ok = attempt([&] {
          std::vector<AstNode> probe;
          probe.push_back(take());
          probe.push_back(type());
          probe.push_back(expect(")"));
          if (!primitive && !cast_follows()) fail("not a cast");
          cast = std::move(probe);
        });
        if (ok) {
          if (primitive) cast.push_back(unary());
          else cast.push_back(unary_not_plus_minus());
          return node("CastExpression", std::move(cast));
        }
      }
    }
    return postfix();
  }

  AstNode unary_not_plus_minus() {
    if (at("!") || at("~")) {
      std::vector<AstNode> kids;
      kids.push_back(take());
      kids.push_back(unary());
      return node("UnaryExpression", std::move(kids));
    }
    return unary();
  }

  AstNode postfix() {
    AstNode e = primary();
    for (;;) {
      if (at(".")) {
        std::vector<AstNode> kids;
        kids.push_back(std::move(e));
        kids.push_back(take());
        if (at_word("class") || at_word("this")) {
          kids.push_back(take());
          e = node("FieldAccess", std::move(kids));
          continue;
        }
        if (at("<")) kids.push_back(type_arguments());
        if (peek(1).kind == TokenKind::Separator && peek(1).text == "(") {
          kids.push_back(leaf_as(kind::kMethodName, TokenKind::Identifier));
          kids.push_back(arguments());
          e = node("MethodInvocation", std::move(kids));
        } else {
          kids.push_back(leaf_as(kind::kIdentifier, TokenKind::Identifier));
          e = node("FieldAccess", std::move(kids));
        }
      } else if (at("[")) {
        std::vector<AstNode> kids;
        kids.push_back(std::move(e));
        kids.push_back(take());
        kids.push_back(expression());
        kids.push_back(expect("]"));
        e = node("ArrayAccess", std::move(kids));
      } else if (at("::")) {
        std::vector<AstNode> kids;
        kids.push_back(std::move(e));
        kids.push_back(take());
        if (at_word("new")) kids.push_back(take());
        else kids.push_back(leaf_as(kind::kMethodName, TokenKind::Identifier));
        e = node("MethodReference", std::move(kids));
      } else {
        break;
      }
    }
    while (at("++") || at("--")) {
      std::vector<AstNode> kids;
      kids.push_back(std::move(e));
      kids.push_back(take());
      e = node("UnaryExpression", std::move(kids));
    }
    return e;
  }

  std::vector<AstNode> arguments_children() {
    std::vector<AstNode> kids;
    kids.push_back(expect("("));
    if (!at(")")) {
      for (;;) {
        kids.push_back(expression());
        if (!at(",")) break;
        kids.push_back(take());
      }
    }
    kids.push_back(expect(")"));
    return kids;
  }

  AstNode arguments() { return node("Arguments", arguments_children()); }

  AstNode primary() {
    const Token& t = cur();
    switch (t.kind) {
      case TokenKind::IntegerLiteral:
      case TokenKind::FloatingLiteral:
      case TokenKind::StringLiteral:
      case TokenKind::CharLiteral:
      case TokenKind::BooleanLiteral:
      case TokenKind::NullLiteral:
        return take();
      case TokenKind::Identifier: {
        if (peek(1).kind == TokenKind::Separator && peek(1).text == "(") {
          std::vector<AstNode> kids;
          kids.push_back(leaf_as(kind::kMethodName, TokenKind::Identifier));
          kids.push_back(arguments());
          return node("MethodInvocation", std::move(kids));
        }
        return take();
      }
      case TokenKind::Keyword: {
        if (t.text == "this" || t.text == "super") {
          if (peek(1).kind == TokenKind::Separator && peek(1).text == "(") {
            std::vector<AstNode> kids;
            kids.push_back(take());
            kids.push_back(arguments());
            return node("ConstructorInvocation", std::move(kids));
          }
          return take();
        }
        if (t.text == "new") return creation();
        if (contains(kPrimitiveTypes, t.text)) {
          // int.class, int[].class
          std::vector<AstNode> kids;
          kids.push_back(type());
          kids.push_back(expect("."));
          kids.push_back(expect("class"));
          return node("ClassLiteral", std::move(kids));
        }
        break;
      }
      case TokenKind::Separator:
        if (t.text == "(") {
          std::vector<AstNode> kids;
          kids.push_back(take());
          kids.push_back(expression());
          kids.push_back(expect(")"));
          return node("ParenthesizedExpression", std::move(kids));
        }
        break;
      default:
        break;
    }
    fail("expected an expression");
  }

  AstNode creation() {
    std::vector<AstNode> kids;
    kids.push_back(take());  // new
    kids.push_back(type(false));
    if (at("[")) {
      bool sized = false;
      while (at("[")) {
        kids.push_back(take());
        if (!at("]")) {
          kids.push_back(expression());
          sized = true;
        }
        kids.push_back(expect("]"));
      }
      if (!sized) kids.push_back(array_initializer());
      return node("ArrayCreationExpression", std::move(kids));
    }
    kids.push_back(arguments());
    if (at("{")) {
      std::vector<AstNode> body;
      body.push_back(take());
      while (!at("}")) {
        if (at_end()) fail("expected '}'");
        body.push_back(member());
      }
      body.push_back(take());
      kids.push_back(node("ClassBody", std::move(body)));
    }
    return node("ObjectCreationExpression", std::move(kids));
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::vector<std::size_t> splits_;
};

}  // namespace

AstNode parse_program(std::string_view source, Language) {
  return Parser(source).compilation_unit();
}

AstNode parse_statements(std::string_view source) { return Parser(source).statement_list(); }

AstNode parse_expression(std::string_view source) { return Parser(source).whole_expression(); }

}  // namespace kc::ast
