#pragma once

// Reader for the record files used by tutorials, profiles and catalogs.
// The accepted language is a strict subset of TOML: dotted bare keys,
// basic/literal strings (single and multi-line), integers, booleans,
// arrays of strings, `[table]` and `[[array-of-tables]]` headers.
// Headers are kept in document order so callers can give meaning to
// sequences such as `[[section]]` followed by `[[block]]`.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pb::records {

using StringList = std::vector<std::string>;
using Value = std::variant<std::string, std::int64_t, bool, StringList>;

struct Field {
  std::string key;
  Value value;
  std::size_t line = 0;
  std::size_t column = 0;
};

struct Table {
  std::string name;  // empty for the root table
  bool array_item = false;
  std::size_t line = 0;
  std::vector<Field> fields;

  const Field* find(std::string_view key) const;
  bool has(std::string_view key) const { return find(key) != nullptr; }

  // Typed accessors throw pb::Error(format_error) with the field position
  // when the value has a different type.
  std::optional<std::string> string(std::string_view key) const;
  std::string require_string(std::string_view key) const;
  std::optional<StringList> strings(std::string_view key) const;
  std::optional<std::int64_t> integer(std::string_view key) const;
  std::optional<bool> boolean(std::string_view key) const;

  // Fields whose key starts with `prefix.`, keyed by the remainder.
  std::vector<std::pair<std::string, const Field*>> with_prefix(
      std::string_view prefix) const;
};

struct Document {
  Table root;
  std::vector<Table> tables;
};

// Throws pb::Error(format_error) with "line L, column C: ..." on bad input.
Document parse(std::string_view text);

}  // namespace pb::records
