#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "syntax/span.hpp"

namespace pb::syntax {

enum class TokenKind {
  keyword,
  command,
  identifier,
  long_identifier,
  symbol_identifier,
  variable,
  type_variable,
  natural_number,
  quoted_string,
  cartouche,
  comment,
  whitespace,
  punctuation,
  unknown,
};

std::string_view to_string(TokenKind kind) noexcept;
std::optional<TokenKind> token_kind_from_string(std::string_view name) noexcept;

struct Token {
  TokenKind kind = TokenKind::unknown;
  std::string text;
  SourceSpan span;

  bool is_trivia() const {
    return kind == TokenKind::whitespace || kind == TokenKind::comment;
  }
  bool is_name() const {
    return kind == TokenKind::identifier || kind == TokenKind::long_identifier ||
           kind == TokenKind::command || kind == TokenKind::keyword;
  }

  friend bool operator==(const Token&, const Token&) = default;
};

}  // namespace pb::syntax
