#include "feedback/hints.hpp"

#include "common/bundled.hpp"
#include "common/error.hpp"
#include "common/records.hpp"
#include "syntax/profile.hpp"

namespace pb::feedback {

bool HintRule::matches(const prover::ProverMessage& message,
                       std::string_view command) const {
  if (!severities.empty() && !severities.contains(message.severity)) return false;
  if (!commands.empty() && !commands.contains(std::string(command))) return false;
  return std::regex_search(message.text, compiled_);
}

const std::vector<std::string>& HintRule::hints_for(std::string_view locale) const {
  if (auto it = hints.find(std::string(locale)); it != hints.end()) return it->second;
  return hints.at("en");
}

HintCatalog::HintCatalog(std::vector<HintRule> rules) : rules_(std::move(rules)) {
  for (HintRule& r : rules_) {
    for (std::string_view locale : syntax::kSupportedLocales) {
      auto it = r.hints.find(std::string(locale));
      if (it == r.hints.end() || it->second.empty()) {
        throw Error(Errc::invariant_violation,
                    "hint rule '" + r.id + "' has no '" + std::string(locale) +
                        "' hints");
      }
    }
    try {
      r.compiled_ = std::regex(r.pattern, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
      throw Error(Errc::format_error,
                  "hint rule '" + r.id + "': bad pattern: " + e.what());
    }
  }
}

HintCatalog HintCatalog::parse(std::string_view records_text) {
  records::Document doc = records::parse(records_text);
  std::vector<HintRule> rules;
  for (const records::Table& t : doc.tables) {
    if (t.name != "hint") {
      throw Error(Errc::format_error, "line " + std::to_string(t.line) +
                                          ": unexpected table [" + t.name + "]");
    }
    HintRule r;
    r.id = t.require_string("id");
    r.pattern = t.require_string("pattern");
    for (const std::string& s : t.strings("severity").value_or(records::StringList{})) {
      r.severities.insert(prover::message_severity_from_string(s));
    }
    for (const std::string& c : t.strings("command").value_or(records::StringList{})) {
      r.commands.insert(c);
    }
    for (const auto& [locale, field] : t.with_prefix("hints")) {
      const auto* list = std::get_if<records::StringList>(&field->value);
      if (list == nullptr) {
        throw Error(Errc::format_error, "line " + std::to_string(field->line) +
                                            ": hints must be a list of strings");
      }
      r.hints[locale] = *list;
    }
    rules.push_back(std::move(r));
  }
  return HintCatalog(std::move(rules));
}

const HintRule* HintCatalog::select(const prover::ProverMessage& message,
                                    std::string_view command) const {
  for (const HintRule& r : rules_) {
    if (r.matches(message, command)) return &r;
  }
  return nullptr;
}

const HintCatalog& bundled_hints() {
  static const HintCatalog catalog = HintCatalog::parse(bundled::hints_toml());
  return catalog;
}

}  // namespace pb::feedback
