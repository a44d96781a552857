#include <set>

#include "common/error.hpp"
#include "common/records.hpp"
#include "tutorial/tutorial.hpp"

namespace pb::tutorial {
namespace {

[[noreturn]] void format_error(std::size_t line, std::size_t column,
                               const std::string& message) {
  throw Error(Errc::format_error, "line " + std::to_string(line) +
                                      ", column " + std::to_string(column) +
                                      ": " + message);
}

LocalizedText localized_fields(const records::Table& table,
                               std::string_view prefix) {
  LocalizedText out;
  for (const auto& [locale, field] : table.with_prefix(prefix)) {
    const auto* text = std::get_if<std::string>(&field->value);
    if (text == nullptr) {
      format_error(field->line, field->column,
                   "'" + field->key + "' must be a string");
    }
    out[locale] = *text;
  }
  return out;
}

// Rejects keys outside the allowed set; `localized` keys accept any
// `<key>.<locale>` suffix.
void check_keys(const records::Table& table,
                std::initializer_list<std::string_view> plain,
                std::initializer_list<std::string_view> localized) {
  for (const records::Field& f : table.fields) {
    bool ok = false;
    for (std::string_view k : plain) ok = ok || f.key == k;
    for (std::string_view k : localized) {
      ok = ok || (f.key.size() > k.size() + 1 && f.key.starts_with(k) &&
                  f.key[k.size()] == '.' &&
                  f.key.find('.', k.size() + 1) == std::string::npos);
    }
    if (!ok) format_error(f.line, f.column, "unknown key '" + f.key + "'");
  }
}

BlockKind parse_kind(const records::Table& table) {
  const records::Field* f = table.find("kind");
  if (f == nullptr) format_error(table.line, 1, "block is missing 'kind'");
  std::string kind = table.require_string("kind");
  if (kind == "text") return BlockKind::text;
  if (kind == "example") return BlockKind::example;
  if (kind == "task") return BlockKind::task;
  if (kind == "hidden") return BlockKind::hidden;
  format_error(f->line, f->column, "unknown block kind '" + kind + "'");
}

Block parse_block(const records::Table& table) {
  Block block;
  block.kind = parse_kind(table);
  if (!table.has("id")) format_error(table.line, 1, "block is missing 'id'");
  block.id = table.require_string("id");
  if (block.id.empty()) format_error(table.line, 1, "block id is empty");
  switch (block.kind) {
    case BlockKind::text:
      check_keys(table, {"kind", "id"}, {"content"});
      block.content = localized_fields(table, "content");
      if (block.content.empty()) {
        format_error(table.line, 1,
                     "text block '" + block.id + "' has no content.<locale>");
      }
      break;
    case BlockKind::example:
    case BlockKind::hidden:
      check_keys(table, {"kind", "id", "code"}, {});
      if (!table.has("code")) {
        format_error(table.line, 1,
                     std::string(to_string(block.kind)) + " block '" +
                         block.id + "' is missing 'code'");
      }
      block.code = table.require_string("code");
      break;
    case BlockKind::task:
      check_keys(table, {"kind", "id", "initial"}, {});
      block.initial = table.string("initial").value_or("");
      break;
  }
  return block;
}

// Segment texts are stored without trailing newlines.
std::string trim_trailing_newlines(std::string text) {
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) {
    text.pop_back();
  }
  return text;
}

}  // namespace

Tutorial load_tutorial(std::string_view document) {
  records::Document doc = records::parse(document);
  const records::Table& meta = doc.root;
  check_keys(meta, {"id", "profile", "theory", "imports", "footer"}, {"title"});

  Tutorial t;
  if (!meta.has("id")) format_error(1, 1, "missing 'id'");
  t.id = meta.require_string("id");
  t.title = localized_fields(meta, "title");
  if (t.title.empty()) format_error(1, 1, "missing 'title.en'");
  t.profile = meta.string("profile").value_or("permissive");
  if (!meta.has("theory")) format_error(1, 1, "missing header ('theory')");
  t.theory_name = meta.require_string("theory");
  t.imports = meta.string("imports").value_or("Main");
  if (!meta.has("footer")) format_error(1, 1, "missing footer");
  t.footer = trim_trailing_newlines(meta.require_string("footer"));

  std::set<std::string> ids;
  for (const records::Table& table : doc.tables) {
    if (table.array_item && table.name == "section") {
      check_keys(table, {}, {"title"});
      Section section;
      section.title = localized_fields(table, "title");
      t.sections.push_back(std::move(section));
    } else if (table.array_item && table.name == "block") {
      if (t.sections.empty()) {
        format_error(table.line, 1, "[[block]] before the first [[section]]");
      }
      Block block = parse_block(table);
      block.code = trim_trailing_newlines(std::move(block.code));
      block.initial = trim_trailing_newlines(std::move(block.initial));
      if (!ids.insert(block.id).second) {
        throw Error(Errc::invariant_violation,
                    "duplicate block id '" + block.id + "' (line " +
                        std::to_string(table.line) + ")");
      }
      t.sections.back().blocks.push_back(std::move(block));
    } else {
      format_error(table.line, 1,
                   "unexpected table '" + table.name +
                       "'; expected [[section]] or [[block]]");
    }
  }
  return t;
}

}  // namespace pb::tutorial
