#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "syntax/diagnostic.hpp"

namespace pb::syntax {

enum class RestrictionKind {
  forbidden_method,
  forbidden_rule,
  forbidden_command,
  pattern_restricted,
};

inline constexpr RestrictionKind kAllRestrictionKinds[] = {
    RestrictionKind::forbidden_method, RestrictionKind::forbidden_rule,
    RestrictionKind::forbidden_command, RestrictionKind::pattern_restricted};

inline constexpr std::string_view kSupportedLocales[] = {"en", "de"};

// Diagnostic code, e.g. "forbidden-method".
std::string_view to_string(RestrictionKind kind) noexcept;

// Limits an operator (e.g. "conjunction") to one introduction/elimination
// pattern: rules in `family` other than those in `permitted` are reported.
struct PatternRestriction {
  std::string operator_tag;
  std::string pattern_id;
  std::set<std::string> permitted;
  std::set<std::string> family;
};

struct SyntaxProfile {
  std::string id;
  std::set<std::string> allowed_commands;  // empty: all
  std::set<std::string> allowed_methods;   // empty: all
  std::set<std::string> forbidden_methods;
  std::set<std::string> forbidden_rules;
  std::map<std::string, PatternRestriction> patterns;  // by operator tag
  std::map<RestrictionKind, Severity> severities;
  // kind -> locale -> template; "{name}" is replaced by the offending name.
  std::map<RestrictionKind, std::map<std::string, std::string>> messages;
  // Error-severity restriction findings stop a check before the prover runs.
  bool blocking = true;

  // Throws pb::Error(invariant_violation) naming the broken invariant.
  void validate() const;

  bool command_allowed(std::string_view name) const;
  bool method_allowed(std::string_view name) const;
  // The restriction a rule name violates, if any.
  std::optional<RestrictionKind> rule_violation(std::string_view name) const;

  Severity severity(RestrictionKind kind) const;
  std::string message(RestrictionKind kind, std::string_view locale,
                      std::string_view name) const;
};

// A profile with no restrictions and the built-in message templates.
SyntaxProfile permissive_profile(std::string id = "permissive");

// Parses `[[profile]]` records (each optionally followed by `[[pattern]]`
// records). Every returned profile has passed validate().
std::vector<SyntaxProfile> load_profiles(std::string_view records_text);

// Profiles shipped in data/profiles.toml.
const std::vector<SyntaxProfile>& bundled_profiles();
const SyntaxProfile* find_bundled_profile(std::string_view id);

}  // namespace pb::syntax
