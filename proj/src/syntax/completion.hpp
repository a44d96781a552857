#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "feedback/rules.hpp"
#include "syntax/profile.hpp"
#include "syntax/span.hpp"
#include "syntax/symbols.hpp"

namespace pb::syntax {

enum class CompletionKind { symbol, keyword, rule };

std::string_view to_string(CompletionKind kind) noexcept;

struct Completion {
  SourceSpan replace;
  std::string insert;
  CompletionKind kind;
  std::string label;

  friend bool operator==(const Completion&, const Completion&) = default;
};

// Proof method names offered by completion.
const std::vector<std::string_view>& known_methods();

// Suggestions for the text immediately before `cursor`:
//  - an ASCII abbreviation suffix (e.g. "/\") or a `\<name` escape prefix
//    completes to symbol glyphs;
//  - an identifier prefix completes commands, keywords, proof methods and
//    rule display names.
// Entries the profile forbids are dropped. An empty prefix yields nothing.
// Throws pb::Error(invalid_argument) if cursor is not a character boundary.
std::vector<Completion> complete(std::string_view document, std::size_t cursor,
                                 const SyntaxProfile& profile,
                                 const std::vector<feedback::RuleEntry>& rules,
                                 const SymbolTable& symbols = bundled_symbols());

}  // namespace pb::syntax
