#include "syntax/restrictions.hpp"

#include <algorithm>
#include <array>

namespace pb::syntax {
namespace {

constexpr std::array<std::string_view, 5> kMethodCommands = {
    "apply", "apply_end", "by", "proof", "qed"};
constexpr std::array<std::string_view, 6> kFactCommands = {
    "from", "note", "thm", "unfolding", "using", "with"};
constexpr std::array<std::string_view, 11> kRuleMethods = {
    "drule", "dest",  "elim",  "erule", "frule", "intro",
    "rule",  "subst", "unfold", "fact", "iprover"};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& set, std::string_view v) {
  return std::find(set.begin(), set.end(), v) != set.end();
}

bool is_punct(const Token& t, std::string_view text) {
  return (t.kind == TokenKind::punctuation ||
          t.kind == TokenKind::symbol_identifier) &&
         t.text == text;
}

void scan_method_expression(const CommandOutline& command,
                            std::vector<NameOccurrence>& out) {
  int parens = 0;
  int brackets = 0;
  bool expect_method = true;
  std::string current_method;
  const auto& args = command.arguments;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const Token& t = args[i];
    if (is_punct(t, "[")) {
      ++brackets;
      continue;
    }
    if (is_punct(t, "]")) {
      if (brackets > 0) --brackets;
      continue;
    }
    if (brackets > 0) continue;
    if (is_punct(t, "(")) {
      ++parens;
      expect_method = true;
      current_method.clear();
      continue;
    }
    if (is_punct(t, ")")) {
      if (parens > 0) --parens;
      expect_method = parens == 0;
      current_method.clear();
      continue;
    }
    if (is_punct(t, ",") || is_punct(t, ";") || is_punct(t, "|")) {
      expect_method = true;
      current_method.clear();
      continue;
    }
    if (t.kind != TokenKind::identifier &&
        t.kind != TokenKind::long_identifier &&
        t.kind != TokenKind::command) {
      continue;
    }
    if (expect_method) {
      out.push_back({NameRole::method, t, command.name});
      current_method = t.text;
      expect_method = false;
      continue;
    }
    bool is_modifier = i + 1 < args.size() && is_punct(args[i + 1], ":");
    if (!is_modifier && contains(kRuleMethods, current_method)) {
      out.push_back({NameRole::rule, t, command.name});
    }
  }
}

void scan_facts(const CommandOutline& command,
                std::vector<NameOccurrence>& out) {
  int brackets = 0;
  for (const Token& t : command.arguments) {
    if (is_punct(t, "[")) ++brackets;
    else if (is_punct(t, "]") && brackets > 0) --brackets;
    else if (brackets == 0 && (t.kind == TokenKind::identifier ||
                               t.kind == TokenKind::long_identifier)) {
      out.push_back({NameRole::rule, t, command.name});
    }
  }
}

}  // namespace

std::vector<NameOccurrence> name_occurrences(const CommandOutline& command) {
  std::vector<NameOccurrence> out;
  if (contains(kMethodCommands, command.name)) {
    scan_method_expression(command, out);
  } else if (contains(kFactCommands, command.name)) {
    scan_facts(command, out);
  }
  return out;
}

std::vector<Diagnostic> check_restrictions(
    const std::vector<CommandOutline>& outlines, const SyntaxProfile& profile,
    std::string_view locale) {
  std::vector<Diagnostic> out;
  auto report = [&](RestrictionKind kind, const Token& token) {
    out.push_back(Diagnostic{profile.severity(kind), token.span,
                             std::string(to_string(kind)),
                             profile.message(kind, locale, token.text),
                             Layer::restriction,
                             {}});
  };

  for (const CommandOutline& command : outlines) {
    if (!profile.command_allowed(command.name)) {
      report(RestrictionKind::forbidden_command, command.command);
    }
    for (const NameOccurrence& occ : name_occurrences(command)) {
      if (occ.role == NameRole::method) {
        if (!profile.method_allowed(occ.token.text)) {
          report(RestrictionKind::forbidden_method, occ.token);
        }
      } else if (auto kind = profile.rule_violation(occ.token.text)) {
        report(*kind, occ.token);
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Diagnostic& a, const Diagnostic& b) {
                     return a.span.start < b.span.start;
                   });
  return out;
}

}  // namespace pb::syntax
