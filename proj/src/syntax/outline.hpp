#pragma once

#include <string>
#include <vector>

#include "syntax/diagnostic.hpp"
#include "syntax/token.hpp"

namespace pb::syntax {

struct CommandOutline {
  std::string name;
  // From the command keyword to the end of its last argument token.
  SourceSpan span;
  // Non-trivia tokens after the command keyword.
  std::vector<Token> arguments;
  // The command keyword token itself.
  Token command;
};

struct OutlineResult {
  std::vector<CommandOutline> commands;
  std::vector<Diagnostic> diagnostics;
};

// Groups a token stream into commands. Reports text before the first
// command, unterminated strings/cartouches/comments and stray characters
// as outer-syntax diagnostics ordered by position.
OutlineResult outline(const std::vector<Token>& tokens,
                      std::string_view locale = "en");

}  // namespace pb::syntax
