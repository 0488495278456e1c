#pragma once

#include <string_view>

#include "kc/ast/ast.hpp"

namespace kc::ast {

enum class Language { Java };

// Parses a compilation unit. Besides ordinary class-based files this accepts
// the bare-method layout used by drill sites (one or more method or field
// declarations with no enclosing class). Throws ParseError at the first
// syntax error.
AstNode parse_program(std::string_view source, Language language = Language::Java);

// Parses a sequence of block statements (no enclosing method). The root has
// kind "StatementList".
AstNode parse_statements(std::string_view source);

// Parses a single expression spanning the whole input.
AstNode parse_expression(std::string_view source);

}  // namespace kc::ast
