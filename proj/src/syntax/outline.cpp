#include "syntax/outline.hpp"

#include <algorithm>

namespace pb::syntax {
namespace {

struct Message {
  std::string_view code;
  std::string_view en;
  std::string_view de;
};

constexpr Message kMessages[] = {
    {"leading-garbage", "Text before the first command",
     "Text vor dem ersten Befehl"},
    {"unterminated-string", "Unterminated string: missing closing \"",
     "Nicht abgeschlossene Zeichenkette: schließendes \" fehlt"},
    {"unterminated-cartouche", "Unterminated cartouche: missing closing ›",
     "Nicht abgeschlossene Cartouche: schließendes › fehlt"},
    {"unterminated-comment", "Unterminated comment: missing closing *)",
     "Nicht abgeschlossener Kommentar: schließendes *) fehlt"},
    {"invalid-character", "Invalid character in outer syntax",
     "Ungültiges Zeichen in der äußeren Syntax"},
};

Diagnostic make(std::string_view code, SourceSpan span,
                std::string_view locale) {
  for (const Message& m : kMessages) {
    if (m.code == code) {
      return Diagnostic{Severity::error, span, std::string(code),
                        std::string(locale == "de" ? m.de : m.en),
                        Layer::outer_syntax, {}};
    }
  }
  return Diagnostic{Severity::error, span, std::string(code), std::string(code),
                    Layer::outer_syntax, {}};
}

std::string_view unknown_code(const Token& token) {
  std::string_view t = token.text;
  if (t.starts_with('"')) return "unterminated-string";
  if (t.starts_with("‹") || t.starts_with("\\<open>")) {
    return "unterminated-cartouche";
  }
  if (t.starts_with("(*")) return "unterminated-comment";
  return "invalid-character";
}

}  // namespace

OutlineResult outline(const std::vector<Token>& tokens,
                      std::string_view locale) {
  OutlineResult result;
  std::optional<std::size_t> garbage_start;
  std::size_t last_end = 0;

  for (const Token& token : tokens) {
    if (token.kind == TokenKind::unknown) {
      result.diagnostics.push_back(make(unknown_code(token), token.span, locale));
    }
    if (token.is_trivia()) continue;
    last_end = token.span.end;

    if (token.kind == TokenKind::command) {
      if (garbage_start && result.commands.empty()) {
        result.diagnostics.push_back(make(
            "leading-garbage", SourceSpan{*garbage_start, token.span.start},
            locale));
        garbage_start.reset();
      }
      CommandOutline cmd;
      cmd.name = token.text;
      cmd.span = token.span;
      cmd.command = token;
      result.commands.push_back(std::move(cmd));
      continue;
    }
    if (result.commands.empty()) {
      if (!garbage_start) garbage_start = token.span.start;
      continue;
    }
    CommandOutline& cmd = result.commands.back();
    cmd.arguments.push_back(token);
    cmd.span.end = token.span.end;
  }

  if (garbage_start) {
    result.diagnostics.push_back(
        make("leading-garbage", SourceSpan{*garbage_start, last_end}, locale));
  }
  std::stable_sort(result.diagnostics.begin(), result.diagnostics.end(),
                   [](const Diagnostic& a, const Diagnostic& b) {
                     return a.span.start < b.span.start;
                   });
  return result;
}

}  // namespace pb::syntax
