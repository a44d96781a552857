#include <array>
#include <utility>

#include "common/error.hpp"
#include "common/utf8.hpp"
#include "syntax/diagnostic.hpp"
#include "syntax/token.hpp"

namespace pb::syntax {
namespace {

constexpr std::array<std::pair<TokenKind, std::string_view>, 14> kKindNames{{
    {TokenKind::keyword, "keyword"},
    {TokenKind::command, "command"},
    {TokenKind::identifier, "identifier"},
    {TokenKind::long_identifier, "long-identifier"},
    {TokenKind::symbol_identifier, "symbol-identifier"},
    {TokenKind::variable, "variable"},
    {TokenKind::type_variable, "type-variable"},
    {TokenKind::natural_number, "natural-number"},
    {TokenKind::quoted_string, "quoted-string"},
    {TokenKind::cartouche, "cartouche"},
    {TokenKind::comment, "comment"},
    {TokenKind::whitespace, "whitespace"},
    {TokenKind::punctuation, "punctuation"},
    {TokenKind::unknown, "unknown"},
}};

}  // namespace

std::string_view to_string(TokenKind kind) noexcept {
  for (auto [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<TokenKind> token_kind_from_string(std::string_view name) noexcept {
  for (auto [k, n] : kKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

std::string_view to_string(Severity severity) noexcept {
  switch (severity) {
    case Severity::error: return "error";
    case Severity::warning: return "warning";
    case Severity::info: return "info";
  }
  return "error";
}

std::string_view to_string(Layer layer) noexcept {
  switch (layer) {
    case Layer::outer_syntax: return "outer-syntax";
    case Layer::restriction: return "restriction";
    case Layer::prover: return "prover";
  }
  return "outer-syntax";
}

Severity severity_from_string(std::string_view name) {
  if (name == "error") return Severity::error;
  if (name == "warning") return Severity::warning;
  if (name == "info" || name == "information") return Severity::info;
  throw Error(Errc::invalid_argument,
              "unknown severity '" + std::string(name) + "'");
}

bool is_valid_span(const SourceSpan& span, std::string_view document) noexcept {
  return span.start <= span.end && span.end <= document.size() &&
         utf8::is_boundary(document, span.start) &&
         utf8::is_boundary(document, span.end);
}

}  // namespace pb::syntax
