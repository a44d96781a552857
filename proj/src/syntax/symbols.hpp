#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pb::syntax {

struct SymbolEntry {
  std::string name;       // "and"
  std::string glyph;      // "∧"
  std::string escape;     // "\<and>"
  std::optional<std::string> abbreviation;  // "/\"

  friend bool operator==(const SymbolEntry&, const SymbolEntry&) = default;
};

// Immutable-by-default table of prover symbols. Entries are consistent:
// escape == "\<" + name + ">", the glyph is one code point, and names,
// glyphs and abbreviations are unique.
class SymbolTable {
 public:
  // Parses `name<TAB>glyph<TAB>escape[<TAB>abbreviation]` lines; blank
  // lines and lines starting with '#' are ignored. A `# version: N` line
  // sets version(). Throws pb::Error(format_error / invariant_violation).
  static SymbolTable parse(std::string_view tsv);

  // Adds course-specific symbols. Redefining an existing name, glyph,
  // escape or abbreviation throws pb::Error(invariant_violation).
  void extend(const std::vector<SymbolEntry>& extra);

  // Entries whose name (case-insensitive), abbreviation or glyph contains
  // the query, ordered by name. The empty query matches everything.
  std::vector<SymbolEntry> lookup(std::string_view query) const;

  const std::vector<SymbolEntry>& entries() const { return entries_; }
  int version() const { return version_; }

 private:
  void add(SymbolEntry entry);

  std::vector<SymbolEntry> entries_;  // sorted by name
  int version_ = 0;
};

// The table shipped in data/symbols.tsv.
const SymbolTable& bundled_symbols();

std::vector<SymbolEntry> lookup_symbol(std::string_view query);

}  // namespace pb::syntax
