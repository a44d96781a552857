#pragma once

// Random tutorials and states plus a naive assembly oracle that shares no
// code with tutorial::assemble_theory.

#include <string>
#include <vector>

#include "support.hpp"
#include "tutorial/tutorial.hpp"

namespace pb::test {

inline std::string random_code(Rng& rng) {
  static const std::vector<std::string> lines = {
      "lemma l: \"A ⟶ A\"", "  by (rule impI)", "proof -", "qed", "  assume \"A\"",
      "definition d :: bool where \"d ≡ True\"", "(* comment *)", "text ‹α β›", "", "  sorry"};
  std::string out;
  std::size_t n = uniform(rng, 0, 4);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) out += "\n";
    out += uniform(rng, 0, 3) == 0 ? random_text(rng, 12) : pick(rng, lines);
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

inline tutorial::Tutorial random_tutorial(Rng& rng, int serial) {
  using tutorial::Block;
  using tutorial::BlockKind;
  tutorial::Tutorial t;
  t.id = "gen-" + std::to_string(serial);
  t.title = {{"en", "Generated"}};
  t.profile = "permissive";
  t.theory_name = "Gen" + std::to_string(serial);
  t.imports = "Main";
  t.footer = "end";
  int next = 0;
  std::size_t sections = uniform(rng, 1, 3);
  for (std::size_t s = 0; s < sections; ++s) {
    tutorial::Section section;
    section.title = {{"en", "S" + std::to_string(s)}};
    std::size_t blocks = uniform(rng, 0, 5);
    for (std::size_t b = 0; b < blocks; ++b) {
      Block block;
      block.id = "b" + std::to_string(next++);
      block.kind = static_cast<BlockKind>(uniform(rng, 0, 3));
      switch (block.kind) {
        case BlockKind::text: block.content = {{"en", "prose"}}; break;
        case BlockKind::example:
        case BlockKind::hidden: block.code = random_code(rng); break;
        case BlockKind::task: block.initial = random_code(rng); break;
      }
      section.blocks.push_back(std::move(block));
    }
    t.sections.push_back(std::move(section));
  }
  return t;
}

inline tutorial::TutorialState random_state(Rng& rng, const tutorial::Tutorial& t) {
  tutorial::TutorialState s = tutorial::fresh_state(t, "u1");
  for (auto& [id, content] : s.contents) {
    if (uniform(rng, 0, 2) != 0) content = random_code(rng);
  }
  return s;
}

// One part of the naive join: text plus the origin it must map to.
struct OraclePart {
  std::string text;
  bool hidden = true;
  std::string block_id;
};

inline std::vector<OraclePart> oracle_parts(const tutorial::Tutorial& t,
                                            const tutorial::TutorialState& s,
                                            const std::string& preamble) {
  std::vector<OraclePart> parts;
  std::string header = "theory " + t.theory_name + " imports " + t.imports + " begin";
  if (!preamble.empty()) {
    header += "\n" + preamble;
    while (header.back() == '\n') header.pop_back();
  }
  parts.push_back({header, true, ""});
  for (const auto& section : t.sections) {
    for (const auto& b : section.blocks) {
      switch (b.kind) {
        case tutorial::BlockKind::text: break;
        case tutorial::BlockKind::example: parts.push_back({b.code, false, b.id}); break;
        case tutorial::BlockKind::hidden: parts.push_back({b.code, true, b.id}); break;
        case tutorial::BlockKind::task:
          parts.push_back({s.contents.at(b.id), false, b.id});
          break;
      }
    }
  }
  parts.push_back({t.footer, true, ""});
  return parts;
}

inline std::string oracle_join(const std::vector<OraclePart>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += "\n";
    out += parts[i].text;
  }
  return out;
}

struct OracleOrigin {
  bool hidden = true;
  std::string block_id;
  std::size_t local = 0;

  bool operator==(const OracleOrigin&) const = default;
};

// Expected origin of the one-byte span starting at `offset`: the part that
// contains the byte, or for a separator newline the start of the next part.
inline OracleOrigin oracle_origin(const std::vector<OraclePart>& parts, std::size_t offset) {
  std::size_t at = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    std::size_t end = at + parts[i].text.size();
    if (offset < end) {
      if (parts[i].hidden) return {true, "", 0};
      return {false, parts[i].block_id, offset - at};
    }
    if (offset == end && i + 1 < parts.size()) {
      const OraclePart& next = parts[i + 1];
      if (next.hidden) return {true, "", 0};
      return {false, next.block_id, 0};
    }
    at = end + 1;
  }
  return {true, "", 0};
}

}  // namespace pb::test
