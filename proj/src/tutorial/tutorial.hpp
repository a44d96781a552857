#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "syntax/diagnostic.hpp"
#include "syntax/profile.hpp"
#include "syntax/span.hpp"

namespace pb::tutorial {

using syntax::SourceSpan;
using LocalizedText = std::map<std::string, std::string>;  // locale -> text

enum class BlockKind { text, example, task, hidden };

std::string_view to_string(BlockKind kind) noexcept;

// Text for the locale, falling back to English, then to any entry.
std::string localized(const LocalizedText& text, std::string_view locale);

struct Block {
  std::string id;
  BlockKind kind = BlockKind::text;
  LocalizedText content;  // text blocks
  std::string code;       // example and hidden blocks: fixed prover code
  std::string initial;    // task blocks: starting content

  bool editable() const { return kind == BlockKind::task; }
};

struct Section {
  LocalizedText title;
  std::vector<Block> blocks;
};

struct Tutorial {
  std::string id;
  LocalizedText title;
  std::string profile;  // syntax profile id
  std::string theory_name;
  std::string imports;
  std::string footer;
  std::vector<Section> sections;

  // "theory <name> imports <imports> begin"
  std::string header_text() const;

  const Block* find_block(std::string_view id) const;
  std::vector<const Block*> blocks() const;
  std::vector<const Block*> task_blocks() const;
};

// Parses the tutorial file format (docs/tutorial-format.md). Throws
// pb::Error(format_error) with line/column, or pb::Error(invariant_violation)
// naming the offending block id.
Tutorial load_tutorial(std::string_view document);

enum class Outcome { unchecked, ok, failed };

std::string_view to_string(Outcome outcome) noexcept;
Outcome outcome_from_string(std::string_view name);

struct TutorialState {
  std::string user_id;
  std::string tutorial_id;
  std::map<std::string, std::string> contents;  // task block id -> text
  std::map<std::string, Outcome> outcomes;

  friend bool operator==(const TutorialState&, const TutorialState&) = default;
};

TutorialState fresh_state(const Tutorial& tutorial, std::string user_id);

// Throws pb::Error(mismatch) unless the state belongs to the tutorial and
// its keys are exactly the task block ids.
void check_state(const Tutorial& tutorial, const TutorialState& state);

TutorialState reset_progress(const TutorialState& state,
                             const Tutorial& tutorial);

enum class SegmentOrigin { hidden, block, separator };

struct Segment {
  SourceSpan span;
  SegmentOrigin origin = SegmentOrigin::hidden;
  std::string block_id;  // empty for header, footer and separators
  BlockKind block_kind = BlockKind::hidden;
};

struct AssembledTheory {
  std::string text;
  std::vector<Segment> segments;  // disjoint, ordered, covering text
};

// header (+ preamble), then example/hidden/task code in section order, then
// footer, joined by exactly one '\n'. Text blocks contribute nothing. The
// preamble (e.g. rule alias declarations) is part of the hidden header.
AssembledTheory assemble_theory(const Tutorial& tutorial,
                                const TutorialState& state,
                                std::string_view preamble = {});

struct MappedSpan {
  bool hidden = false;  // tutorial-level origin
  std::string block_id;
  SourceSpan local;
  bool multi_segment = false;

  friend bool operator==(const MappedSpan&, const MappedSpan&) = default;
};

// Maps a theory span back to its block. Spans touching hidden content map
// to the hidden origin; spans covering several visible blocks are clipped
// to the first; zero-length spans on a boundary belong to the following
// segment. Throws pb::Error(out_of_range).
MappedSpan map_span(const AssembledTheory& assembled, SourceSpan span);

// Authoring checks: duplicate ids, outline errors in hidden/example code,
// restriction violations in initial task content. Spans are block-local.
std::vector<syntax::Diagnostic> validate_tutorial(
    const Tutorial& tutorial, const syntax::SyntaxProfile& profile,
    std::string_view locale = "en");

}  // namespace pb::tutorial
