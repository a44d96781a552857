#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "syntax/profile.hpp"

namespace pb::feedback {

// A prover rule with its didactic display name. The wire and the assembled
// theory always use prover names; display names are a presentation layer
// made valid for the prover through alias declarations.
struct RuleEntry {
  std::string display_name;  // "andI"
  std::string prover_name;   // "conjI"
  std::string schema;        // "⟦?P; ?Q⟧ ⟹ ?P ∧ ?Q"
  std::string category;      // operator or technique tag
  std::map<std::string, std::string> description;  // by locale

  std::string describe(std::string_view locale) const;

  friend bool operator==(const RuleEntry&, const RuleEntry&) = default;
};

class RuleCatalog {
 public:
  RuleCatalog() = default;
  // Throws pb::Error(invariant_violation) on duplicate display or prover names.
  explicit RuleCatalog(std::vector<RuleEntry> entries);

  // `[[rule]]` records with display, prover, schema, category,
  // description.<locale>.
  static RuleCatalog parse(std::string_view records_text);

  const std::vector<RuleEntry>& entries() const { return entries_; }
  const RuleEntry* by_display(std::string_view name) const;
  const RuleEntry* by_prover(std::string_view name) const;

  // `lemmas display = prover` lines for every relabeled entry.
  std::string alias_declarations() const;

 private:
  std::vector<RuleEntry> entries_;
};

const RuleCatalog& bundled_rules();

// Entries allowed by the profile, optionally restricted to one category,
// ordered by category then display name.
std::vector<RuleEntry> list_rules(const RuleCatalog& catalog,
                                  const syntax::SyntaxProfile& profile,
                                  std::string_view category = {});

// Case-insensitive substring search over display name, prover name and
// schema, in catalog order.
std::vector<RuleEntry> search_rules(const RuleCatalog& catalog,
                                    std::string_view query);

}  // namespace pb::feedback
