#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "kc/common/error.hpp"

namespace kc::ast {

// Half-open byte range into the source text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const Span&) const = default;
};

enum class TokenKind {
  Identifier,
  Keyword,
  IntegerLiteral,
  FloatingLiteral,
  StringLiteral,
  CharLiteral,
  BooleanLiteral,
  NullLiteral,
  Operator,
  Separator,
  EndOfInput,
};

struct Token {
  TokenKind kind = TokenKind::EndOfInput;
  std::string text;
  Span span;
  std::size_t line = 1;
  std::size_t column = 1;
};

// Syntax error with a 1-based line/column and the byte offset of the
// offending token.
class ParseError : public DataError {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column,
             std::size_t offset);
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t line_, column_, offset_;
};

bool is_java_keyword(std::string_view word);

// Tokenizes Java source. Comments and whitespace are dropped; the final token
// is always EndOfInput with an empty span at the end of the source.
std::vector<Token> tokenize(std::string_view source);

}  // namespace kc::ast
