#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pyrlite/sql/ast.hpp"

namespace pyrlite::sql {

enum class TokenKind : std::uint8_t { Identifier, Number, String, Symbol, End };

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;      // identifiers folded to upper case unless delimited
  std::string raw;       // as written, for messages
  bool delimited = false;
  int line = 1;
  int column = 1;
  std::size_t offset = 0;
};

std::vector<Token> tokenize(std::string_view text);

/// Exactly one statement, optionally followed by a semicolon.
Statement parse_statement(std::string_view text);
/// Statements separated by semicolons.
std::vector<Statement> parse_script(std::string_view text);
/// A lone expression, e.g. a CHECK body or a REST where-clause.
ExprPtr parse_expression(std::string_view text);
Select parse_select(std::string_view text);

/// Metadata words recognised after DDL. Anything else is an error.
const std::vector<std::string>& metadata_words();

}  // namespace pyrlite::sql
