#include "kc/ast/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace kc::ast {

namespace {

constexpr std::array<std::string_view, 50> kKeywords = {
    "abstract", "assert",     "boolean",   "break",      "byte",     "case",
    "catch",    "char",       "class",     "const",      "continue", "default",
    "do",       "double",     "else",      "enum",       "extends",  "final",
    "finally",  "float",      "for",       "goto",       "if",       "implements",
    "import",   "instanceof", "int",       "interface",  "long",     "native",
    "new",      "package",    "private",   "protected",  "public",   "return",
    "short",    "static",     "strictfp",  "super",      "switch",   "synchronized",
    "this",     "throw",      "throws",    "transient",  "try",      "void",
    "volatile", "while"};

// Longest match first within each leading character.
constexpr std::array<std::string_view, 37> kOperators = {
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=",
    "<=",   ">=",  "+=",  "-=",  "*=",  "/=", "&=", "|=", "^=", "%=", "<<", ">>", "=",
    ">",    "<",   "!",   "~",   "?",   ":",  "+",  "-",  "*",  "/",  "&"};
constexpr std::string_view kMoreOperators = "|^%@";
constexpr std::string_view kSeparators = "(){}[];,.";

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$' ||
         static_cast<unsigned char>(c) >= 0x80;
}
bool ident_part(char c) {
  return ident_start(c) || std::isdigit(static_cast<unsigned char>(c));
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_trivia();
      if (pos_ >= src_.size()) {
        out.push_back(Token{TokenKind::EndOfInput, "", {pos_, pos_}, line_, col_});
        return out;
      }
      out.push_back(next());
    }
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, line_, col_, pos_);
  }

  void advance(std::size_t n = 1) {
    for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  char peek(std::size_t off = 0) const {
    return pos_ + off < src_.size() ? src_[pos_ + off] : '\0';
  }

  void skip_trivia() {
    for (;;) {
      while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
        advance();
      if (peek() == '/' && peek(1) == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (peek() == '/' && peek(1) == '*') {
        advance(2);
        while (pos_ < src_.size() && !(peek() == '*' && peek(1) == '/')) advance();
        if (pos_ >= src_.size()) fail("unterminated block comment");
        advance(2);
      } else {
        return;
      }
    }
  }

  Token make(TokenKind kind, std::size_t start, std::size_t line, std::size_t col) {
    return Token{kind, std::string(src_.substr(start, pos_ - start)), {start, pos_}, line, col};
  }

  Token next() {
    const std::size_t start = pos_, line = line_, col = col_;
    const char c = peek();

    if (ident_start(c)) {
      while (pos_ < src_.size() && ident_part(src_[pos_])) advance();
      const auto word = src_.substr(start, pos_ - start);
      TokenKind kind = TokenKind::Identifier;
      if (word == "true" || word == "false") kind = TokenKind::BooleanLiteral;
      else if (word == "null") kind = TokenKind::NullLiteral;
      else if (is_java_keyword(word)) kind = TokenKind::Keyword;
      return make(kind, start, line, col);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      return number(start, line, col);
    }
    if (c == '"') {
      advance();
      while (peek() != '"') {
        if (pos_ >= src_.size() || peek() == '\n') fail("unterminated string literal");
        if (peek() == '\\') advance();
        advance();
      }
      advance();
      return make(TokenKind::StringLiteral, start, line, col);
    }
    if (c == '\'') {
      advance();
      while (peek() != '\'') {
        if (pos_ >= src_.size() || peek() == '\n') fail("unterminated character literal");
        if (peek() == '\\') advance();
        advance();
      }
      advance();
      return make(TokenKind::CharLiteral, start, line, col);
    }
    for (auto op : kOperators) {
      if (src_.substr(pos_, op.size()) == op) {
        if (op == "..." ) {
          advance(op.size());
          return make(TokenKind::Separator, start, line, col);
        }
        advance(op.size());
        return make(TokenKind::Operator, start, line, col);
      }
    }
    if (kMoreOperators.find(c) != std::string_view::npos) {
      advance();
      return make(TokenKind::Operator, start, line, col);
    }
    if (kSeparators.find(c) != std::string_view::npos) {
      advance();
      return make(TokenKind::Separator, start, line, col);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  Token number(std::size_t start, std::size_t line, std::size_t col) {
    bool floating = false;
    if (peek() == '0' && (peek(1) == 'x' || peek(1) == 'X' || peek(1) == 'b' || peek(1) == 'B')) {
      advance(2);
      while (std::isxdigit(static_cast<unsigned char>(peek())) || peek() == '_') advance();
    } else {
      auto digits = [&] {
        while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '_') advance();
      };
      digits();
      if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
        floating = true;
        advance();
        digits();
      } else if (peek() == '.' && !ident_start(peek(1)) && peek(1) != '.') {
        floating = true;  // `1.`
        advance();
      }
      if (peek() == 'e' || peek() == 'E') {
        floating = true;
        advance();
        if (peek() == '+' || peek() == '-') advance();
        if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("malformed exponent");
        digits();
      }
    }
    const char suffix = peek();
    if (suffix == 'f' || suffix == 'F' || suffix == 'd' || suffix == 'D') {
      floating = true;
      advance();
    } else if (suffix == 'l' || suffix == 'L') {
      advance();
    }
    if (ident_part(peek())) fail("malformed numeric literal");
    return make(floating ? TokenKind::FloatingLiteral : TokenKind::IntegerLiteral, start, line,
                col);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

}  // namespace

ParseError::ParseError(const std::string& message, std::size_t line, std::size_t column,
                       std::size_t offset)
    : DataError("syntax error at " + std::to_string(line) + ":" + std::to_string(column) +
                ": " + message),
      line_(line),
      column_(column),
      offset_(offset) {}

bool is_java_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

}  // namespace kc::ast
