#pragma once

#include <string_view>
#include <vector>

#include "syntax/token.hpp"

namespace pb::syntax {

// Splits an Isar document into outer-syntax tokens. Total and lossless:
// the token texts concatenate to the input, malformed material becomes
// TokenKind::unknown.
std::vector<Token> tokenize(std::string_view document);

bool is_command_keyword(std::string_view name) noexcept;
bool is_minor_keyword(std::string_view name) noexcept;

// Sorted lists, used by completion.
const std::vector<std::string_view>& command_keywords();
const std::vector<std::string_view>& minor_keywords();

}  // namespace pb::syntax
