#include "common/records.hpp"

#include <cctype>
#include <charconv>

#include "common/error.hpp"
#include "common/utf8.hpp"

namespace pb::records {
namespace {

[[noreturn]] void fail(std::size_t line, std::size_t column,
                       const std::string& message) {
  throw Error(Errc::format_error, "line " + std::to_string(line) +
                                      ", column " + std::to_string(column) +
                                      ": " + message);
}

bool is_bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Document run() {
    if (!utf8::is_valid(text_)) fail(1, 1, "document is not valid UTF-8");
    Document doc;
    doc.root.line = 1;
    Table* current = &doc.root;
    while (true) {
      skip_blank_lines();
      if (at_end()) break;
      if (peek() == '[') {
        doc.tables.push_back(parse_header());
        current = &doc.tables.back();
      } else {
        Field field = parse_key_value();
        if (current->find(field.key) != nullptr) {
          fail(field.line, field.column, "duplicate key '" + field.key + "'");
        }
        current->fields.push_back(std::move(field));
      }
      finish_line();
    }
    return doc;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }
  std::size_t column() const { return pos_ - line_start_ + 1; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      line_start_ = pos_ + 1;
    }
    ++pos_;
  }

  bool starts_with(std::string_view s) const {
    return text_.substr(pos_, s.size()) == s;
  }

  void skip_spaces() {
    while (!at_end() && (peek() == ' ' || peek() == '\t')) advance();
  }

  void skip_comment() {
    if (peek() == '#') {
      while (!at_end() && peek() != '\n') advance();
    }
  }

  void skip_blank_lines() {
    while (!at_end()) {
      skip_spaces();
      skip_comment();
      if (peek() == '\r' && peek(1) == '\n') advance();
      if (peek() == '\n') {
        advance();
      } else {
        break;
      }
    }
  }

  void finish_line() {
    skip_spaces();
    skip_comment();
    if (peek() == '\r') advance();
    if (at_end()) return;
    if (peek() != '\n') fail(line_, column(), "expected end of line");
    advance();
  }

  std::string parse_key() {
    std::string key;
    while (true) {
      std::size_t start = pos_;
      while (!at_end() && is_bare_key_char(peek())) advance();
      if (pos_ == start) fail(line_, column(), "expected a bare key");
      key.append(text_.substr(start, pos_ - start));
      skip_spaces();
      if (peek() != '.') break;
      key += '.';
      advance();
      skip_spaces();
    }
    return key;
  }

  Table parse_header() {
    Table table;
    table.line = line_;
    advance();
    if (peek() == '[') {
      table.array_item = true;
      advance();
    }
    skip_spaces();
    table.name = parse_key();
    if (peek() != ']') fail(line_, column(), "expected ']'");
    advance();
    if (table.array_item) {
      if (peek() != ']') fail(line_, column(), "expected ']]'");
      advance();
    }
    return table;
  }

  Field parse_key_value() {
    Field field;
    field.line = line_;
    field.column = column();
    field.key = parse_key();
    skip_spaces();
    if (peek() != '=') fail(line_, column(), "expected '=' after key");
    advance();
    skip_spaces();
    field.value = parse_value();
    return field;
  }

  Value parse_value() {
    char c = peek();
    if (c == '"' || c == '\'') return parse_string();
    if (c == '[') return parse_array();
    if (starts_with("true")) {
      for (int i = 0; i < 4; ++i) advance();
      return true;
    }
    if (starts_with("false")) {
      for (int i = 0; i < 5; ++i) advance();
      return false;
    }
    if (c == '-' || c == '+' || std::isdigit(static_cast<unsigned char>(c))) {
      return parse_integer();
    }
    fail(line_, column(), "expected a value");
  }

  std::int64_t parse_integer() {
    std::size_t start = pos_;
    std::size_t start_col = column();
    if (peek() == '+' || peek() == '-') advance();
    while (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) ||
                         peek() == '_')) {
      advance();
    }
    std::string digits;
    for (char ch : text_.substr(start, pos_ - start)) {
      if (ch != '_' && ch != '+') digits += ch;
    }
    std::int64_t value = 0;
    auto [end, ec] =
        std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc() || end != digits.data() + digits.size()) {
      fail(line_, start_col, "invalid integer");
    }
    return value;
  }

  StringList parse_array() {
    StringList items;
    advance();
    while (true) {
      skip_blank_lines();
      if (at_end()) fail(line_, column(), "unterminated array");
      if (peek() == ']') {
        advance();
        return items;
      }
      if (peek() != '"' && peek() != '\'') {
        fail(line_, column(), "arrays may only contain strings");
      }
      items.push_back(parse_string());
      skip_blank_lines();
      if (peek() == ',') {
        advance();
      } else if (peek() != ']') {
        fail(line_, column(), "expected ',' or ']' in array");
      }
    }
  }

  std::string parse_string() {
    std::size_t start_line = line_;
    std::size_t start_col = column();
    char quote = peek();
    bool multi = starts_with(quote == '"' ? "\"\"\"" : "'''");
    bool literal = quote == '\'';
    std::string out;
    if (multi) {
      for (int i = 0; i < 3; ++i) advance();
      if (peek() == '\r' && peek(1) == '\n') advance();
      if (peek() == '\n') advance();
    } else {
      advance();
    }
    while (true) {
      if (at_end()) fail(start_line, start_col, "unterminated string");
      char c = peek();
      if (multi) {
        std::string_view closing = literal ? "'''" : "\"\"\"";
        if (starts_with(closing)) {
          for (int i = 0; i < 3; ++i) advance();
          return out;
        }
      } else {
        if (c == quote) {
          advance();
          return out;
        }
        if (c == '\n') fail(start_line, start_col, "unterminated string");
      }
      if (c == '\\' && !literal) {
        advance();
        parse_escape(out);
        continue;
      }
      out += c;
      advance();
    }
  }

  void parse_escape(std::string& out) {
    std::size_t esc_col = column() - 1;
    char c = peek();
    switch (c) {
      case '"': out += '"'; break;
      case '\\': out += '\\'; break;
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      case 'b': out += '\b'; break;
      case 'f': out += '\f'; break;
      case 'u':
      case 'U': {
        std::size_t digits = c == 'u' ? 4 : 8;
        advance();
        char32_t cp = 0;
        for (std::size_t i = 0; i < digits; ++i) {
          char h = peek();
          int v;
          if (h >= '0' && h <= '9') v = h - '0';
          else if (h >= 'a' && h <= 'f') v = h - 'a' + 10;
          else if (h >= 'A' && h <= 'F') v = h - 'A' + 10;
          else fail(line_, esc_col, "invalid unicode escape");
          cp = cp * 16 + static_cast<char32_t>(v);
          advance();
        }
        if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
          fail(line_, esc_col, "invalid unicode scalar value");
        }
        utf8::append(out, cp);
        return;
      }
      default:
        fail(line_, esc_col, "invalid escape sequence");
    }
    advance();
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t line_start_ = 0;
};

[[noreturn]] void type_error(const Field& f, const char* expected) {
  fail(f.line, f.column, "key '" + f.key + "' must be " + expected);
}

}  // namespace

const Field* Table::find(std::string_view key) const {
  for (const Field& f : fields) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

std::optional<std::string> Table::string(std::string_view key) const {
  const Field* f = find(key);
  if (f == nullptr) return std::nullopt;
  if (const auto* s = std::get_if<std::string>(&f->value)) return *s;
  type_error(*f, "a string");
}

std::string Table::require_string(std::string_view key) const {
  auto value = string(key);
  if (!value) {
    std::string where = name.empty() ? "document" : "[" + name + "]";
    fail(line, 1, "missing key '" + std::string(key) + "' in " + where);
  }
  return *value;
}

std::optional<StringList> Table::strings(std::string_view key) const {
  const Field* f = find(key);
  if (f == nullptr) return std::nullopt;
  if (const auto* s = std::get_if<StringList>(&f->value)) return *s;
  type_error(*f, "an array of strings");
}

std::optional<std::int64_t> Table::integer(std::string_view key) const {
  const Field* f = find(key);
  if (f == nullptr) return std::nullopt;
  if (const auto* v = std::get_if<std::int64_t>(&f->value)) return *v;
  type_error(*f, "an integer");
}

std::optional<bool> Table::boolean(std::string_view key) const {
  const Field* f = find(key);
  if (f == nullptr) return std::nullopt;
  if (const auto* v = std::get_if<bool>(&f->value)) return *v;
  type_error(*f, "a boolean");
}

std::vector<std::pair<std::string, const Field*>> Table::with_prefix(
    std::string_view prefix) const {
  std::vector<std::pair<std::string, const Field*>> out;
  for (const Field& f : fields) {
    if (f.key.size() > prefix.size() + 1 &&
        f.key.compare(0, prefix.size(), prefix) == 0 &&
        f.key[prefix.size()] == '.') {
      out.emplace_back(f.key.substr(prefix.size() + 1), &f);
    }
  }
  return out;
}

Document parse(std::string_view text) { return Parser(text).run(); }

}  // namespace pb::records
