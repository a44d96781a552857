#include "syntax/profile.hpp"

#include "common/bundled.hpp"
#include "common/error.hpp"
#include "common/records.hpp"

namespace pb::syntax {
namespace {

struct DefaultTemplate {
  RestrictionKind kind;
  Severity severity;
  std::string_view en;
  std::string_view de;
};

// Forbidden tactics block by default; the remaining kinds are style rules.
constexpr DefaultTemplate kDefaults[] = {
    {RestrictionKind::forbidden_method, Severity::error,
     "The proof method '{name}' is not allowed in this course. Use a single "
     "rule step instead.",
     "Die Beweismethode '{name}' ist in diesem Kurs nicht erlaubt. Verwende "
     "stattdessen einen einzelnen Regelschritt."},
    {RestrictionKind::forbidden_rule, Severity::warning,
     "The rule '{name}' is not available in this course.",
     "Die Regel '{name}' ist in diesem Kurs nicht verfügbar."},
    {RestrictionKind::forbidden_command, Severity::warning,
     "The command '{name}' is not used in this course.",
     "Der Befehl '{name}' wird in diesem Kurs nicht verwendet."},
    {RestrictionKind::pattern_restricted, Severity::warning,
     "'{name}' is an alternative pattern; this course uses one pattern per "
     "operator.",
     "'{name}' ist ein alternatives Muster; in diesem Kurs gibt es ein Muster "
     "pro Operator."},
};

std::optional<RestrictionKind> kind_from_string(std::string_view name) {
  for (RestrictionKind kind : kAllRestrictionKinds) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

std::set<std::string> to_set(const std::optional<records::StringList>& list) {
  if (!list) return {};
  return {list->begin(), list->end()};
}

void fill_defaults(SyntaxProfile& profile) {
  for (const DefaultTemplate& d : kDefaults) {
    profile.severities.try_emplace(d.kind, d.severity);
    auto& locales = profile.messages[d.kind];
    locales.try_emplace("en", d.en);
    locales.try_emplace("de", d.de);
  }
}

[[noreturn]] void bad_record(const records::Table& table,
                             const std::string& message) {
  throw Error(Errc::format_error,
              "line " + std::to_string(table.line) + ": " + message);
}

}  // namespace

std::string_view to_string(RestrictionKind kind) noexcept {
  switch (kind) {
    case RestrictionKind::forbidden_method: return "forbidden-method";
    case RestrictionKind::forbidden_rule: return "forbidden-rule";
    case RestrictionKind::forbidden_command: return "forbidden-command";
    case RestrictionKind::pattern_restricted: return "pattern-restricted";
  }
  return "forbidden-method";
}

void SyntaxProfile::validate() const {
  auto violation = [&](const std::string& what) {
    throw Error(Errc::invariant_violation, "profile '" + id + "': " + what);
  };
  if (id.empty()) violation("empty id");
  for (const std::string& m : forbidden_methods) {
    if (allowed_methods.contains(m)) {
      violation("method '" + m + "' is both allowed and forbidden");
    }
  }
  for (const std::string& c : allowed_commands) {
    if (forbidden_methods.contains(c)) {
      violation("name '" + c + "' is both allowed and forbidden");
    }
  }
  for (RestrictionKind kind : kAllRestrictionKinds) {
    auto it = messages.find(kind);
    for (std::string_view locale : kSupportedLocales) {
      if (it == messages.end() || !it->second.contains(std::string(locale))) {
        violation("missing '" + std::string(locale) + "' message for " +
                  std::string(to_string(kind)));
      }
    }
  }
  for (const auto& [tag, pattern] : patterns) {
    for (const std::string& rule : pattern.permitted) {
      if (!pattern.family.contains(rule)) {
        violation("permitted rule '" + rule + "' is not in the '" + tag +
                  "' family");
      }
    }
  }
}

bool SyntaxProfile::command_allowed(std::string_view name) const {
  return allowed_commands.empty() ||
         allowed_commands.contains(std::string(name));
}

bool SyntaxProfile::method_allowed(std::string_view name) const {
  std::string key(name);
  if (forbidden_methods.contains(key)) return false;
  return allowed_methods.empty() || allowed_methods.contains(key);
}

std::optional<RestrictionKind> SyntaxProfile::rule_violation(
    std::string_view name) const {
  std::string key(name);
  if (forbidden_rules.contains(key)) return RestrictionKind::forbidden_rule;
  for (const auto& [tag, pattern] : patterns) {
    if (pattern.family.contains(key) && !pattern.permitted.contains(key)) {
      return RestrictionKind::pattern_restricted;
    }
  }
  return std::nullopt;
}

Severity SyntaxProfile::severity(RestrictionKind kind) const {
  auto it = severities.find(kind);
  if (it != severities.end()) return it->second;
  for (const DefaultTemplate& d : kDefaults) {
    if (d.kind == kind) return d.severity;
  }
  return Severity::error;
}

std::string SyntaxProfile::message(RestrictionKind kind,
                                   std::string_view locale,
                                   std::string_view name) const {
  std::string text;
  auto it = messages.find(kind);
  if (it != messages.end()) {
    auto loc = it->second.find(std::string(locale));
    if (loc == it->second.end()) loc = it->second.find("en");
    if (loc != it->second.end()) text = loc->second;
  }
  if (text.empty()) text = std::string(to_string(kind)) + ": {name}";
  std::string out;
  std::string_view rest = text;
  while (true) {
    std::size_t at = rest.find("{name}");
    if (at == std::string_view::npos) break;
    out.append(rest.substr(0, at));
    out.append(name);
    rest.remove_prefix(at + 6);
  }
  out.append(rest);
  return out;
}

SyntaxProfile permissive_profile(std::string id) {
  SyntaxProfile profile;
  profile.id = std::move(id);
  profile.blocking = false;
  fill_defaults(profile);
  return profile;
}

std::vector<SyntaxProfile> load_profiles(std::string_view records_text) {
  records::Document doc = records::parse(records_text);
  std::vector<SyntaxProfile> profiles;
  for (const records::Table& table : doc.tables) {
    if (table.name == "profile") {
      SyntaxProfile p;
      p.id = table.require_string("id");
      p.blocking = table.boolean("blocking").value_or(true);
      p.allowed_commands = to_set(table.strings("allowed_commands"));
      p.allowed_methods = to_set(table.strings("allowed_methods"));
      p.forbidden_methods = to_set(table.strings("forbidden_methods"));
      p.forbidden_rules = to_set(table.strings("forbidden_rules"));
      for (const auto& [rest, field] : table.with_prefix("severity")) {
        auto kind = kind_from_string(rest);
        if (!kind) bad_record(table, "unknown restriction kind '" + rest + "'");
        p.severities[*kind] =
            severity_from_string(std::get<std::string>(field->value));
      }
      for (const auto& [rest, field] : table.with_prefix("message")) {
        std::size_t dot = rest.rfind('.');
        if (dot == std::string::npos) {
          bad_record(table, "message keys are message.<kind>.<locale>");
        }
        auto kind = kind_from_string(rest.substr(0, dot));
        if (!kind) bad_record(table, "unknown restriction kind in '" + rest + "'");
        const auto* text = std::get_if<std::string>(&field->value);
        if (text == nullptr) bad_record(table, "message must be a string");
        p.messages[*kind][rest.substr(dot + 1)] = *text;
      }
      fill_defaults(p);
      profiles.push_back(std::move(p));
    } else if (table.name == "pattern") {
      if (profiles.empty()) {
        bad_record(table, "[[pattern]] must follow a [[profile]]");
      }
      PatternRestriction pattern;
      pattern.operator_tag = table.require_string("operator");
      pattern.pattern_id = table.string("pattern").value_or(pattern.operator_tag);
      pattern.permitted = to_set(table.strings("permitted"));
      pattern.family = to_set(table.strings("family"));
      std::string tag = pattern.operator_tag;
      if (!profiles.back().patterns.emplace(tag, std::move(pattern)).second) {
        bad_record(table, "duplicate pattern for operator '" + tag + "'");
      }
    } else {
      bad_record(table, "unexpected table [" + table.name + "]");
    }
  }
  for (const SyntaxProfile& p : profiles) p.validate();
  return profiles;
}

const std::vector<SyntaxProfile>& bundled_profiles() {
  static const std::vector<SyntaxProfile> profiles =
      load_profiles(bundled::profiles_toml());
  return profiles;
}

const SyntaxProfile* find_bundled_profile(std::string_view id) {
  for (const SyntaxProfile& p : bundled_profiles()) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

}  // namespace pb::syntax
