#include "syntax/symbols.hpp"

#include <algorithm>
#include <charconv>

#include "common/bundled.hpp"
#include "common/error.hpp"
#include "common/utf8.hpp"

namespace pb::syntax {
namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    std::size_t tab = line.find('\t');
    out.push_back(line.substr(0, tab));
    if (tab == std::string_view::npos) break;
    line.remove_prefix(tab + 1);
  }
  return out;
}

}  // namespace

SymbolTable SymbolTable::parse(std::string_view tsv) {
  SymbolTable table;
  std::size_t line_no = 0;
  while (!tsv.empty()) {
    std::size_t nl = tsv.find('\n');
    std::string_view line = tsv.substr(0, nl);
    tsv.remove_prefix(nl == std::string_view::npos ? tsv.size() : nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      constexpr std::string_view kVersion = "# version:";
      if (line.starts_with(kVersion)) {
        std::string_view v = line.substr(kVersion.size());
        while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
        std::from_chars(v.data(), v.data() + v.size(), table.version_);
      }
      continue;
    }
    auto fields = split_tabs(line);
    if (fields.size() < 3 || fields.size() > 4) {
      throw Error(Errc::format_error,
                  "symbol table line " + std::to_string(line_no) +
                      ": expected 3 or 4 tab-separated fields");
    }
    SymbolEntry entry{std::string(fields[0]), std::string(fields[1]),
                      std::string(fields[2]), std::nullopt};
    if (fields.size() == 4 && !fields[3].empty()) {
      entry.abbreviation = std::string(fields[3]);
    }
    table.add(std::move(entry));
  }
  return table;
}

void SymbolTable::add(SymbolEntry entry) {
  auto violation = [&](const std::string& what) {
    throw Error(Errc::invariant_violation,
                "symbol '" + entry.name + "': " + what);
  };
  if (entry.name.empty()) violation("empty name");
  if (entry.escape != "\\<" + entry.name + ">") {
    violation("escape '" + entry.escape + "' does not match the name");
  }
  utf8::Decoded d = utf8::decode(entry.glyph, 0);
  if (d.length == 0 || d.length != entry.glyph.size()) {
    violation("glyph must be a single code point");
  }
  for (const SymbolEntry& e : entries_) {
    if (e.name == entry.name) violation("name already defined");
    if (e.glyph == entry.glyph) violation("glyph already used by '" + e.name + "'");
    if (entry.abbreviation && e.abbreviation == entry.abbreviation) {
      violation("abbreviation already used by '" + e.name + "'");
    }
  }
  auto pos = std::lower_bound(
      entries_.begin(), entries_.end(), entry,
      [](const SymbolEntry& a, const SymbolEntry& b) { return a.name < b.name; });
  entries_.insert(pos, std::move(entry));
}

void SymbolTable::extend(const std::vector<SymbolEntry>& extra) {
  SymbolTable copy = *this;
  for (const SymbolEntry& e : extra) copy.add(e);
  *this = std::move(copy);
}

std::vector<SymbolEntry> SymbolTable::lookup(std::string_view query) const {
  if (query.empty()) return entries_;
  std::string lowered = utf8::ascii_lower(query);
  std::vector<SymbolEntry> out;
  for (const SymbolEntry& e : entries_) {
    bool hit = utf8::ascii_lower(e.name).find(lowered) != std::string::npos ||
               e.glyph.find(query) != std::string::npos ||
               (e.abbreviation &&
                e.abbreviation->find(query) != std::string::npos);
    if (hit) out.push_back(e);
  }
  return out;
}

const SymbolTable& bundled_symbols() {
  static const SymbolTable table = SymbolTable::parse(bundled::symbols_tsv());
  return table;
}

std::vector<SymbolEntry> lookup_symbol(std::string_view query) {
  return bundled_symbols().lookup(query);
}

}  // namespace pb::syntax
