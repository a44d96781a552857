#include "tutorial/tutorial.hpp"

#include <set>

#include "common/error.hpp"
#include "syntax/lexer.hpp"
#include "syntax/outline.hpp"
#include "syntax/restrictions.hpp"

namespace pb::tutorial {

std::string_view to_string(BlockKind kind) noexcept {
  switch (kind) {
    case BlockKind::text: return "text";
    case BlockKind::example: return "example";
    case BlockKind::task: return "task";
    case BlockKind::hidden: return "hidden";
  }
  return "text";
}

std::string_view to_string(Outcome outcome) noexcept {
  switch (outcome) {
    case Outcome::unchecked: return "unchecked";
    case Outcome::ok: return "ok";
    case Outcome::failed: return "failed";
  }
  return "unchecked";
}

Outcome outcome_from_string(std::string_view name) {
  if (name == "unchecked") return Outcome::unchecked;
  if (name == "ok") return Outcome::ok;
  if (name == "failed") return Outcome::failed;
  throw Error(Errc::invalid_argument, "unknown outcome '" + std::string(name) + "'");
}

std::string localized(const LocalizedText& text, std::string_view locale) {
  if (auto it = text.find(std::string(locale)); it != text.end()) return it->second;
  if (auto it = text.find("en"); it != text.end()) return it->second;
  return text.empty() ? std::string() : text.begin()->second;
}

std::string Tutorial::header_text() const {
  return "theory " + theory_name + " imports " + imports + " begin";
}

const Block* Tutorial::find_block(std::string_view block_id) const {
  for (const Section& s : sections) {
    for (const Block& b : s.blocks) {
      if (b.id == block_id) return &b;
    }
  }
  return nullptr;
}

std::vector<const Block*> Tutorial::blocks() const {
  std::vector<const Block*> out;
  for (const Section& s : sections) {
    for (const Block& b : s.blocks) out.push_back(&b);
  }
  return out;
}

std::vector<const Block*> Tutorial::task_blocks() const {
  std::vector<const Block*> out;
  for (const Block* b : blocks()) {
    if (b->kind == BlockKind::task) out.push_back(b);
  }
  return out;
}

TutorialState fresh_state(const Tutorial& tutorial, std::string user_id) {
  TutorialState state;
  state.user_id = std::move(user_id);
  state.tutorial_id = tutorial.id;
  for (const Block* b : tutorial.task_blocks()) {
    state.contents[b->id] = b->initial;
    state.outcomes[b->id] = Outcome::unchecked;
  }
  return state;
}

void check_state(const Tutorial& tutorial, const TutorialState& state) {
  if (state.tutorial_id != tutorial.id) {
    throw Error(Errc::mismatch, "state belongs to tutorial '" +
                                    state.tutorial_id + "', not '" +
                                    tutorial.id + "'");
  }
  auto tasks = tutorial.task_blocks();
  if (state.contents.size() != tasks.size()) {
    throw Error(Errc::mismatch, "state does not cover exactly the task blocks");
  }
  for (const Block* b : tasks) {
    if (!state.contents.contains(b->id)) {
      throw Error(Errc::mismatch, "state is missing task block '" + b->id + "'");
    }
  }
}

TutorialState reset_progress(const TutorialState& state,
                             const Tutorial& tutorial) {
  check_state(tutorial, state);
  return fresh_state(tutorial, state.user_id);
}

AssembledTheory assemble_theory(const Tutorial& tutorial,
                                const TutorialState& state,
                                std::string_view preamble) {
  check_state(tutorial, state);
  AssembledTheory out;
  auto push = [&](std::string_view text, SegmentOrigin origin,
                  std::string block_id, BlockKind kind) {
    if (!out.segments.empty()) {
      std::size_t at = out.text.size();
      out.text += '\n';
      out.segments.push_back(
          {SourceSpan{at, at + 1}, SegmentOrigin::separator, {}, BlockKind::hidden});
    }
    std::size_t start = out.text.size();
    out.text.append(text);
    out.segments.push_back(
        {SourceSpan{start, out.text.size()}, origin, std::move(block_id), kind});
  };

  std::string header = tutorial.header_text();
  if (!preamble.empty()) {
    header += '\n';
    header.append(preamble);
    while (!header.empty() && header.back() == '\n') header.pop_back();
  }
  push(header, SegmentOrigin::hidden, {}, BlockKind::hidden);
  for (const Block* b : tutorial.blocks()) {
    switch (b->kind) {
      case BlockKind::text:
        break;
      case BlockKind::example:
        push(b->code, SegmentOrigin::block, b->id, b->kind);
        break;
      case BlockKind::hidden:
        push(b->code, SegmentOrigin::hidden, b->id, b->kind);
        break;
      case BlockKind::task:
        push(state.contents.at(b->id), SegmentOrigin::block, b->id, b->kind);
        break;
    }
  }
  push(tutorial.footer, SegmentOrigin::hidden, {}, BlockKind::hidden);
  return out;
}

namespace {

MappedSpan at_segment(const Segment& seg, std::size_t start, std::size_t end) {
  if (seg.origin == SegmentOrigin::hidden) return MappedSpan{true, {}, {}, false};
  return MappedSpan{false, seg.block_id,
                    SourceSpan{start - seg.span.start, end - seg.span.start},
                    false};
}

MappedSpan map_point(const AssembledTheory& assembled, std::size_t p) {
  const auto& segs = assembled.segments;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const Segment& s = segs[i];
    bool starts_here = s.span.start == p;
    bool inside = s.span.start < p && p < s.span.end;
    if (!starts_here && !inside) continue;
    if (s.origin == SegmentOrigin::separator) {
      // separators glue segments; attach to what follows
      return map_point(assembled, s.span.end);
    }
    return at_segment(s, p, p);
  }
  // p is the end of the text: belongs to the final segment
  return at_segment(segs.back(), p, p);
}

}  // namespace

MappedSpan map_span(const AssembledTheory& assembled, SourceSpan span) {
  if (span.start > span.end || span.end > assembled.text.size()) {
    throw Error(Errc::out_of_range,
                "span [" + std::to_string(span.start) + ", " +
                    std::to_string(span.end) + ") is outside the theory (length " +
                    std::to_string(assembled.text.size()) + ")");
  }
  if (span.empty()) return map_point(assembled, span.start);

  std::vector<const Segment*> touched;
  for (const Segment& s : assembled.segments) {
    if (s.origin == SegmentOrigin::separator || s.span.empty()) continue;
    if (s.span.start < span.end && span.start < s.span.end) touched.push_back(&s);
  }
  // only separator bytes: they belong to whatever follows them
  if (touched.empty()) return map_point(assembled, span.end);
  for (const Segment* s : touched) {
    if (s->origin == SegmentOrigin::hidden) return MappedSpan{true, {}, {}, false};
  }
  const Segment& first = *touched.front();
  MappedSpan mapped = at_segment(first, std::max(span.start, first.span.start),
                                 std::min(span.end, first.span.end));
  mapped.multi_segment = touched.size() > 1;
  return mapped;
}

std::vector<syntax::Diagnostic> validate_tutorial(
    const Tutorial& tutorial, const syntax::SyntaxProfile& profile,
    std::string_view locale) {
  std::vector<syntax::Diagnostic> out;
  std::set<std::string> seen;
  for (const Block* b : tutorial.blocks()) {
    if (!seen.insert(b->id).second) {
      out.push_back({syntax::Severity::error, {}, "duplicate-block-id",
                     "Duplicate block id '" + b->id + "'",
                     syntax::Layer::outer_syntax, b->id});
    }
    std::string_view code;
    bool restrict = false;
    switch (b->kind) {
      case BlockKind::text: continue;
      case BlockKind::example:
      case BlockKind::hidden: code = b->code; break;
      case BlockKind::task:
        code = b->initial;
        restrict = true;
        break;
    }
    auto tokens = syntax::tokenize(code);
    auto outlined = syntax::outline(tokens, locale);
    for (auto& d : outlined.diagnostics) {
      d.block_id = b->id;
      out.push_back(std::move(d));
    }
    if (restrict) {
      for (auto& d :
           syntax::check_restrictions(outlined.commands, profile, locale)) {
        d.block_id = b->id;
        out.push_back(std::move(d));
      }
    }
  }
  return out;
}

}  // namespace pb::tutorial
