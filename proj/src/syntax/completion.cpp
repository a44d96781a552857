#include "syntax/completion.hpp"

#include <algorithm>
#include <cctype>

#include "common/error.hpp"
#include "common/utf8.hpp"
#include "syntax/lexer.hpp"

namespace pb::syntax {
namespace {

constexpr std::size_t kMaxAbbreviation = 4;

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

bool is_abbrev_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return u > 0x20 && u < 0x7F && !std::isalnum(u) && c != '"' && c != '`';
}

void symbol_completions(std::string_view document, std::size_t cursor,
                        const SymbolTable& symbols,
                        std::vector<Completion>& out) {
  // Longest abbreviation-like suffix that prefixes some abbreviation.
  std::size_t run = 0;
  while (run < kMaxAbbreviation && run < cursor &&
         is_abbrev_char(document[cursor - run - 1])) {
    ++run;
  }
  for (std::size_t k = run; k > 0; --k) {
    std::string_view suffix = document.substr(cursor - k, k);
    std::vector<Completion> exact;
    std::vector<Completion> partial;
    for (const SymbolEntry& e : symbols.entries()) {
      if (!e.abbreviation || !e.abbreviation->starts_with(suffix)) continue;
      Completion c{SourceSpan{cursor - k, cursor}, e.glyph,
                   CompletionKind::symbol, e.name};
      (*e.abbreviation == suffix ? exact : partial).push_back(std::move(c));
    }
    if (!exact.empty() || !partial.empty()) {
      out.insert(out.end(), exact.begin(), exact.end());
      out.insert(out.end(), partial.begin(), partial.end());
      return;
    }
  }
}

}  // namespace

std::string_view to_string(CompletionKind kind) noexcept {
  switch (kind) {
    case CompletionKind::symbol: return "symbol";
    case CompletionKind::keyword: return "keyword";
    case CompletionKind::rule: return "rule";
  }
  return "symbol";
}

const std::vector<std::string_view>& known_methods() {
  static const std::vector<std::string_view> methods = [] {
    std::vector<std::string_view> v{
        "arith",    "assumption", "auto",   "blast",     "cases",
        "contradiction", "drule", "elim",   "erule",     "fact",
        "fast",     "fastforce",  "force",  "frule",     "induct",
        "induction", "intro",     "iprover", "linarith", "meson",
        "metis",    "presburger", "rule",   "simp",      "smt",
        "standard", "subst",      "this",   "unfold"};
    std::sort(v.begin(), v.end());
    return v;
  }();
  return methods;
}

std::vector<Completion> complete(std::string_view document, std::size_t cursor,
                                 const SyntaxProfile& profile,
                                 const std::vector<feedback::RuleEntry>& rules,
                                 const SymbolTable& symbols) {
  if (cursor > document.size() || !utf8::is_boundary(document, cursor)) {
    throw Error(Errc::invalid_argument,
                "cursor " + std::to_string(cursor) +
                    " is not a character boundary of the document");
  }
  std::vector<Completion> out;

  std::size_t start = cursor;
  while (start > 0 && is_ident_char(document[start - 1])) --start;
  std::string_view prefix = document.substr(start, cursor - start);

  // `\<name` escape prefix
  if (start >= 2 && document.substr(start - 2, 2) == "\\<") {
    std::string typed = "\\<" + std::string(prefix);
    for (const SymbolEntry& e : symbols.entries()) {
      if (e.escape.starts_with(typed)) {
        out.push_back({SourceSpan{start - 2, cursor}, e.glyph,
                       CompletionKind::symbol, e.name});
      }
    }
    return out;
  }

  if (prefix.empty()) {
    symbol_completions(document, cursor, symbols, out);
    return out;
  }
  if (std::isdigit(static_cast<unsigned char>(prefix.front()))) return out;

  SourceSpan replace{start, cursor};
  std::vector<Completion> keywords;
  auto offer_keyword = [&](std::string_view word) {
    if (word.size() > prefix.size() && word.starts_with(prefix)) {
      keywords.push_back({replace, std::string(word), CompletionKind::keyword,
                          std::string(word)});
    }
  };
  for (std::string_view cmd : command_keywords()) {
    if (profile.command_allowed(cmd)) offer_keyword(cmd);
  }
  for (std::string_view kw : minor_keywords()) offer_keyword(kw);
  for (std::string_view m : known_methods()) {
    if (profile.method_allowed(m)) offer_keyword(m);
  }
  std::sort(keywords.begin(), keywords.end(),
            [](const Completion& a, const Completion& b) {
              return a.insert < b.insert;
            });
  keywords.erase(std::unique(keywords.begin(), keywords.end()), keywords.end());

  std::vector<Completion> rule_items;
  for (const feedback::RuleEntry& rule : rules) {
    if (profile.rule_violation(rule.display_name) ||
        profile.rule_violation(rule.prover_name)) {
      continue;
    }
    const std::string& name = rule.display_name;
    if (name.size() > prefix.size() && name.starts_with(prefix)) {
      rule_items.push_back({replace, name, CompletionKind::rule, name});
    }
  }
  std::sort(rule_items.begin(), rule_items.end(),
            [](const Completion& a, const Completion& b) {
              return a.insert < b.insert;
            });

  out.insert(out.end(), keywords.begin(), keywords.end());
  out.insert(out.end(), rule_items.begin(), rule_items.end());
  return out;
}

}  // namespace pb::syntax
