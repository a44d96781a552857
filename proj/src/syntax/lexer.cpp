#include "syntax/lexer.hpp"

#include <algorithm>
#include <array>

#include "common/utf8.hpp"

namespace pb::syntax {
namespace {

// Outer-syntax commands recognised by the outline parser. This is the
// subset of Isabelle/Isar (HOL) commands that appears in teaching material.
const std::vector<std::string_view> kCommands = [] {
  std::vector<std::string_view> v{
      ".",           "..",          "abbreviation", "also",
      "apply",       "apply_end",   "assume",       "axiomatization",
      "back",        "by",          "case",         "chapter",
      "class",       "consider",    "consts",       "context",
      "corollary",   "datatype",    "declare",      "defer",
      "define",      "definition",  "done",         "end",
      "finally",     "find_theorems", "fix",        "from",
      "fun",         "function",    "have",         "hence",
      "inductive",   "instance",    "instantiation", "interpret",
      "lemma",       "lemmas",      "let",          "locale",
      "moreover",    "next",        "note",         "notepad",
      "notation",    "obtain",      "oops",         "paragraph",
      "prefer",      "presume",     "primrec",      "print_state",
      "proof",       "proposition", "qed",          "record",
      "schematic_goal", "section",  "show",         "sorry",
      "subgoal",     "subsection",  "subsubsection", "supply",
      "term",        "termination", "text",         "then",
      "theorem",     "theory",      "thm",          "thus",
      "txt",         "type_synonym", "typedecl",    "ultimately",
      "unfolding",   "using",       "value",        "with",
  };
  std::sort(v.begin(), v.end());
  return v;
}();

const std::vector<std::string_view> kMinorKeywords = [] {
  std::vector<std::string_view> v{
      "and",      "assumes", "begin",  "binder",  "defines", "fixes",
      "for",      "if",      "imports", "in",     "includes", "infix",
      "infixl",   "infixr",  "is",     "keywords", "monos",  "morphisms",
      "notes",    "obtains", "open",   "otherwise", "overloaded",
      "rewrites", "shows",   "structure", "when", "where",
  };
  std::sort(v.begin(), v.end());
  return v;
}();

constexpr char32_t kCartoucheOpen = U'‹';
constexpr char32_t kCartoucheClose = U'›';

bool is_ascii_letter(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_greek_letter(char32_t cp) {
  // Greek and Coptic block letters, except lambda which is a binder.
  return ((cp >= U'Α' && cp <= U'Ω') || (cp >= U'α' && cp <= U'ω')) &&
         cp != U'λ' && cp != 0x03A2;
}

bool is_sym_char(char c) {
  switch (c) {
    case '!': case '#': case '$': case '%': case '&': case '*': case '+':
    case '-': case '/': case '<': case '=': case '>': case '?': case '@':
    case '^': case '_': case '|': case '~':
      return true;
    default:
      return false;
  }
}

bool is_blank(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_punctuation(char c) {
  switch (c) {
    case '(': case ')': case '[': case ']': case '{': case '}': case ',':
    case ':': case ';': case '.': case '`': case '\'': case '\\':
      return true;
    default:
      return false;
  }
}

constexpr std::array<std::string_view, 23> kGreekNames = {
    "alpha", "beta",  "gamma",   "delta", "epsilon", "zeta",  "eta",  "theta",
    "iota",  "kappa", "mu",      "nu",    "xi",      "pi",    "rho",  "sigma",
    "tau",   "upsilon", "phi",   "chi",   "psi",     "omega", "Gamma"};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    while (pos_ < text_.size()) lex_one();
    return std::move(tokens_);
  }

 private:
  char at(std::size_t p) const { return p < text_.size() ? text_[p] : '\0'; }

  void emit(TokenKind kind, std::size_t start) {
    tokens_.push_back(Token{kind, std::string(text_.substr(start, pos_ - start)),
                            SourceSpan{start, pos_}});
  }

  // Length of a symbol escape `\<name>` at p, or 0.
  std::size_t escape_length(std::size_t p) const {
    if (at(p) != '\\' || at(p + 1) != '<') return 0;
    std::size_t q = p + 2;
    if (at(q) == '^') ++q;
    std::size_t name_start = q;
    while (q < text_.size() &&
           (is_ascii_letter(text_[q]) || is_digit(text_[q]) || text_[q] == '_' ||
            text_[q] == '\'')) {
      ++q;
    }
    if (q == name_start || at(q) != '>') return 0;
    return q + 1 - p;
  }

  std::string_view escape_name(std::size_t p, std::size_t len) const {
    return text_.substr(p + 2, len - 3);
  }

  // Length of a letter starting at p (ASCII, greek, or a letter escape).
  std::size_t letter_length(std::size_t p) const {
    if (p >= text_.size()) return 0;
    if (is_ascii_letter(text_[p])) return 1;
    if (text_[p] == '\\') {
      std::size_t len = escape_length(p);
      if (len == 0) return 0;
      std::string_view name = escape_name(p, len);
      bool latin = (name.size() == 1 || name.size() == 2) &&
                   std::all_of(name.begin(), name.end(), is_ascii_letter);
      bool greek = std::find(kGreekNames.begin(), kGreekNames.end(), name) !=
                   kGreekNames.end();
      return latin || greek ? len : 0;
    }
    if (static_cast<unsigned char>(text_[p]) >= 0x80) {
      utf8::Decoded d = utf8::decode(text_, p);
      if (d.length != 0 && is_greek_letter(d.code_point)) return d.length;
    }
    return 0;
  }

  std::size_t quasiletter_length(std::size_t p) const {
    char c = at(p);
    if (is_digit(c) || c == '_' || c == '\'') return 1;
    return letter_length(p);
  }

  // Scans an identifier starting at p; returns the end position or p.
  std::size_t scan_ident(std::size_t p) const {
    std::size_t len = letter_length(p);
    if (len == 0) return p;
    p += len;
    while (std::size_t q = quasiletter_length(p)) p += q;
    return p;
  }

  std::size_t scan_nat(std::size_t p) const {
    while (is_digit(at(p))) ++p;
    return p;
  }

  bool starts_cartouche(std::size_t p, std::size_t* len) const {
    utf8::Decoded d = utf8::decode(text_, p);
    if (d.length != 0 && d.code_point == kCartoucheOpen) {
      *len = d.length;
      return true;
    }
    std::size_t el = escape_length(p);
    if (el != 0 && escape_name(p, el) == "open") {
      *len = el;
      return true;
    }
    return false;
  }

  bool ends_cartouche(std::size_t p, std::size_t* len) const {
    utf8::Decoded d = utf8::decode(text_, p);
    if (d.length != 0 && d.code_point == kCartoucheClose) {
      *len = d.length;
      return true;
    }
    std::size_t el = escape_length(p);
    if (el != 0 && escape_name(p, el) == "close") {
      *len = el;
      return true;
    }
    return false;
  }

  // Advances over a code point, or a single byte if it is invalid.
  std::size_t step(std::size_t p) const {
    utf8::Decoded d = utf8::decode(text_, p);
    return p + (d.length == 0 ? 1 : d.length);
  }

  void lex_cartouche(std::size_t start, std::size_t open_len) {
    std::size_t p = start + open_len;
    int depth = 1;
    while (p < text_.size()) {
      std::size_t len = 0;
      if (starts_cartouche(p, &len)) {
        ++depth;
        p += len;
      } else if (ends_cartouche(p, &len)) {
        p += len;
        if (--depth == 0) {
          pos_ = p;
          emit(TokenKind::cartouche, start);
          return;
        }
      } else {
        p = step(p);
      }
    }
    pos_ = text_.size();
    emit(TokenKind::unknown, start);
  }

  void lex_comment(std::size_t start) {
    std::size_t p = start + 2;
    int depth = 1;
    while (p < text_.size()) {
      if (at(p) == '(' && at(p + 1) == '*') {
        ++depth;
        p += 2;
      } else if (at(p) == '*' && at(p + 1) == ')') {
        p += 2;
        if (--depth == 0) {
          pos_ = p;
          emit(TokenKind::comment, start);
          return;
        }
      } else {
        p = step(p);
      }
    }
    pos_ = text_.size();
    emit(TokenKind::unknown, start);
  }

  void lex_string(std::size_t start) {
    std::size_t p = start + 1;
    while (p < text_.size()) {
      char c = text_[p];
      if (c == '\\' && p + 1 < text_.size() &&
          (text_[p + 1] == '"' || text_[p + 1] == '\\')) {
        p += 2;
      } else if (c == '"') {
        pos_ = p + 1;
        emit(TokenKind::quoted_string, start);
        return;
      } else {
        p = step(p);
      }
    }
    pos_ = text_.size();
    emit(TokenKind::unknown, start);
  }

  void lex_name(std::size_t start, std::size_t end) {
    // long identifiers: ident(.ident)+
    bool is_long = false;
    while (at(end) == '.') {
      std::size_t next = scan_ident(end + 1);
      if (next == end + 1) break;
      end = next;
      is_long = true;
    }
    pos_ = end;
    std::string_view word = text_.substr(start, end - start);
    TokenKind kind = TokenKind::identifier;
    if (is_long) {
      kind = TokenKind::long_identifier;
    } else if (is_command_keyword(word)) {
      kind = TokenKind::command;
    } else if (is_minor_keyword(word)) {
      kind = TokenKind::keyword;
    }
    emit(kind, start);
  }

  // ?ident, ?ident.nat, ?'ident, 'ident
  bool try_variable(std::size_t start) {
    std::size_t p = start;
    bool schematic = false;
    if (at(p) == '?') {
      schematic = true;
      ++p;
    }
    bool type = false;
    if (at(p) == '\'') {
      type = true;
      ++p;
    }
    if (!schematic && !type) return false;
    std::size_t end = scan_ident(p);
    if (end == p) return false;
    if (schematic && at(end) == '.' && is_digit(at(end + 1))) {
      end = scan_nat(end + 1);
    }
    pos_ = end;
    emit(type ? TokenKind::type_variable : TokenKind::variable, start);
    return true;
  }

  void lex_unknown(std::size_t start) {
    std::size_t p = start;
    // group a run of bytes that cannot start any token
    do {
      utf8::Decoded d = utf8::decode(text_, p);
      if (d.length != 0 && d.code_point >= 0x80) break;
      if (d.length != 0) {
        char c = static_cast<char>(d.code_point);
        if (is_blank(c) || is_punctuation(c) || is_sym_char(c) ||
            is_ascii_letter(c) || is_digit(c) || c == '"') {
          break;
        }
      }
      ++p;
    } while (p < text_.size());
    if (p == start) p = step(start);
    pos_ = p;
    emit(TokenKind::unknown, start);
  }

  void lex_one() {
    std::size_t start = pos_;
    char c = text_[start];

    if (is_blank(c)) {
      while (pos_ < text_.size() && is_blank(text_[pos_])) ++pos_;
      emit(TokenKind::whitespace, start);
      return;
    }
    if (c == '(' && at(start + 1) == '*') {
      lex_comment(start);
      return;
    }
    if (c == '"') {
      lex_string(start);
      return;
    }
    std::size_t len = 0;
    if (starts_cartouche(start, &len)) {
      lex_cartouche(start, len);
      return;
    }
    if (c == '?' || c == '\'') {
      if (try_variable(start)) return;
    }
    if (std::size_t end = scan_ident(start); end != start) {
      lex_name(start, end);
      return;
    }
    if (is_digit(c)) {
      std::size_t end = scan_nat(start);
      if (at(end) == '.' && is_digit(at(end + 1))) end = scan_nat(end + 1);
      pos_ = end;
      emit(TokenKind::natural_number, start);
      return;
    }
    if (c == '\\') {
      if (std::size_t el = escape_length(start)) {
        pos_ = start + el;
        emit(TokenKind::symbol_identifier, start);
        return;
      }
    }
    if (is_sym_char(c)) {
      while (pos_ < text_.size() && is_sym_char(text_[pos_])) ++pos_;
      emit(TokenKind::symbol_identifier, start);
      return;
    }
    if (c == '.') {
      pos_ = at(start + 1) == '.' ? start + 2 : start + 1;
      emit(TokenKind::command, start);
      return;
    }
    if (is_punctuation(c)) {
      pos_ = start + 1;
      emit(TokenKind::punctuation, start);
      return;
    }
    if (static_cast<unsigned char>(c) >= 0x80) {
      utf8::Decoded d = utf8::decode(text_, start);
      if (d.length != 0 && d.code_point != kCartoucheClose) {
        pos_ = start + d.length;
        emit(TokenKind::symbol_identifier, start);
        return;
      }
    }
    lex_unknown(start);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<Token> tokens_;
};

}  // namespace

std::vector<Token> tokenize(std::string_view document) {
  return Lexer(document).run();
}

bool is_command_keyword(std::string_view name) noexcept {
  return std::binary_search(kCommands.begin(), kCommands.end(), name);
}

bool is_minor_keyword(std::string_view name) noexcept {
  return std::binary_search(kMinorKeywords.begin(), kMinorKeywords.end(), name);
}

const std::vector<std::string_view>& command_keywords() { return kCommands; }
const std::vector<std::string_view>& minor_keywords() { return kMinorKeywords; }

}  // namespace pb::syntax
