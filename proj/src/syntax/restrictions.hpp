#pragma once

#include <string_view>
#include <vector>

#include "syntax/diagnostic.hpp"
#include "syntax/outline.hpp"
#include "syntax/profile.hpp"

namespace pb::syntax {

enum class NameRole { method, rule };

struct NameOccurrence {
  NameRole role;
  Token token;
  std::string command;
};

// Names in method or rule position within one command. Method positions
// are the first name of a method expression after `by`, `apply`, `proof`,
// `qed`, `apply_end`, and after `(`, `,`, `;`, `|` or a closing `)` at top
// level. Rule positions are the arguments of rule-taking methods (rule,
// erule, intro, ...) and the fact names after using/from/with/unfolding.
// Material inside strings, cartouches and attribute brackets is skipped.
std::vector<NameOccurrence> name_occurrences(const CommandOutline& command);

// One restriction-layer diagnostic per violation, ordered by span start.
std::vector<Diagnostic> check_restrictions(
    const std::vector<CommandOutline>& outlines, const SyntaxProfile& profile,
    std::string_view locale = "en");

}  // namespace pb::syntax
