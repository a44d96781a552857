#include "feedback/rules.hpp"

#include <algorithm>
#include <set>

#include "common/bundled.hpp"
#include "common/error.hpp"
#include "common/records.hpp"
#include "common/utf8.hpp"
#include "tutorial/tutorial.hpp"

namespace pb::feedback {

std::string RuleEntry::describe(std::string_view locale) const {
  return tutorial::localized(description, locale);
}

RuleCatalog::RuleCatalog(std::vector<RuleEntry> entries)
    : entries_(std::move(entries)) {
  std::set<std::string_view> display;
  std::set<std::string_view> prover;
  for (const RuleEntry& e : entries_) {
    if (e.display_name.empty() || e.prover_name.empty()) {
      throw Error(Errc::invariant_violation, "rule entry with an empty name");
    }
    if (!display.insert(e.display_name).second) {
      throw Error(Errc::invariant_violation,
                  "duplicate display name '" + e.display_name + "'");
    }
    if (!prover.insert(e.prover_name).second) {
      throw Error(Errc::invariant_violation,
                  "duplicate prover name '" + e.prover_name + "'");
    }
  }
  // a display name may not shadow a different rule's prover name
  for (const RuleEntry& e : entries_) {
    const RuleEntry* other = by_prover(e.display_name);
    if (other != nullptr && other != &e) {
      throw Error(Errc::invariant_violation,
                  "display name '" + e.display_name +
                      "' is the prover name of another rule");
    }
  }
}

RuleCatalog RuleCatalog::parse(std::string_view records_text) {
  records::Document doc = records::parse(records_text);
  std::vector<RuleEntry> entries;
  for (const records::Table& t : doc.tables) {
    if (t.name != "rule") {
      throw Error(Errc::format_error, "line " + std::to_string(t.line) +
                                          ": unexpected table [" + t.name + "]");
    }
    RuleEntry e;
    e.display_name = t.require_string("display");
    e.prover_name = t.string("prover").value_or(e.display_name);
    e.schema = t.string("schema").value_or("");
    e.category = t.string("category").value_or("");
    for (const auto& [locale, field] : t.with_prefix("description")) {
      const auto* text = std::get_if<std::string>(&field->value);
      if (text == nullptr) {
        throw Error(Errc::format_error, "line " + std::to_string(field->line) +
                                            ": description must be a string");
      }
      e.description[locale] = *text;
    }
    entries.push_back(std::move(e));
  }
  return RuleCatalog(std::move(entries));
}

const RuleEntry* RuleCatalog::by_display(std::string_view name) const {
  for (const RuleEntry& e : entries_) {
    if (e.display_name == name) return &e;
  }
  return nullptr;
}

const RuleEntry* RuleCatalog::by_prover(std::string_view name) const {
  for (const RuleEntry& e : entries_) {
    if (e.prover_name == name) return &e;
  }
  return nullptr;
}

std::string RuleCatalog::alias_declarations() const {
  std::string out;
  for (const RuleEntry& e : entries_) {
    if (e.display_name == e.prover_name) continue;
    out += "lemmas " + e.display_name + " = " + e.prover_name + "\n";
  }
  return out;
}

const RuleCatalog& bundled_rules() {
  static const RuleCatalog catalog = RuleCatalog::parse(bundled::rules_toml());
  return catalog;
}

std::vector<RuleEntry> list_rules(const RuleCatalog& catalog,
                                  const syntax::SyntaxProfile& profile,
                                  std::string_view category) {
  std::vector<RuleEntry> out;
  for (const RuleEntry& e : catalog.entries()) {
    if (!category.empty() && e.category != category) continue;
    if (profile.forbidden_rules.contains(e.display_name) ||
        profile.forbidden_rules.contains(e.prover_name)) {
      continue;
    }
    out.push_back(e);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RuleEntry& a, const RuleEntry& b) {
                     if (a.category != b.category) return a.category < b.category;
                     return a.display_name < b.display_name;
                   });
  return out;
}

std::vector<RuleEntry> search_rules(const RuleCatalog& catalog,
                                    std::string_view query) {
  std::string needle = utf8::ascii_lower(query);
  std::vector<RuleEntry> out;
  for (const RuleEntry& e : catalog.entries()) {
    if (utf8::ascii_lower(e.display_name).find(needle) != std::string::npos ||
        utf8::ascii_lower(e.prover_name).find(needle) != std::string::npos ||
        utf8::ascii_lower(e.schema).find(needle) != std::string::npos) {
      out.push_back(e);
    }
  }
  return out;
}

}  // namespace pb::feedback
