#pragma once

#include <map>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "prover/result.hpp"

namespace pb::feedback {

// A hint rule fires when its pattern occurs in the message text and the
// optional severity and command filters (empty means any) both accept.
struct HintRule {
  std::string id;
  std::string pattern;  // ECMAScript regex, case-insensitive
  std::set<prover::MessageSeverity> severities;
  std::set<std::string> commands;
  std::map<std::string, std::vector<std::string>> hints;  // by locale

  bool matches(const prover::ProverMessage& message,
               std::string_view command) const;
  // Falls back to English when the locale has no entry.
  const std::vector<std::string>& hints_for(std::string_view locale) const;

 private:
  friend class HintCatalog;
  std::regex compiled_;
};

class HintCatalog {
 public:
  HintCatalog() = default;
  // Compiles patterns; throws pb::Error(invariant_violation) when a rule has
  // no hints for a supported locale or (format_error) on a bad pattern.
  explicit HintCatalog(std::vector<HintRule> rules);

  // `[[hint]]` records: id, pattern, severity[], command[], hints.<locale>[].
  static HintCatalog parse(std::string_view records_text);

  const std::vector<HintRule>& rules() const { return rules_; }
  // First rule in catalog order that matches, or null.
  const HintRule* select(const prover::ProverMessage& message,
                         std::string_view command) const;

 private:
  std::vector<HintRule> rules_;
};

const HintCatalog& bundled_hints();

}  // namespace pb::feedback
