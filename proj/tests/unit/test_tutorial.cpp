#include <algorithm>
#include <string>

#include "common/error.hpp"
#include "doctest.h"
#include "support.hpp"
#include "syntax/profile.hpp"
#include "tutorial/tutorial.hpp"
#include "tutorial_gen.hpp"

using namespace pb;
using namespace pb::tutorial;
using pb::syntax::SourceSpan;

namespace {

const char* kMinimal = R"(id = "mini"
title.en = "Mini"
profile = "permissive"
theory = "Mini"
imports = "Main"
footer = "end"

[[section]]
title.en = "Only"

[[block]]
kind = "text"
id = "t"
content.en = "Prove it."

[[block]]
kind = "task"
id = "k"
initial = '''
lemma x: "A ⟶ A"
  sorry
'''
)";

Errc load_error(const std::string& doc) {
  try {
    load_tutorial(doc);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::ok;
}

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

Tutorial conjunction() { return load_tutorial(test::read_source("tutorials/conjunction.toml")); }

}  // namespace

TEST_CASE("load: minimal tutorial") {
  Tutorial t = load_tutorial(kMinimal);
  CHECK(t.id == "mini");
  CHECK(t.header_text() == "theory Mini imports Main begin");
  REQUIRE(t.sections.size() == 1);
  REQUIRE(t.sections[0].blocks.size() == 2);
  CHECK(t.sections[0].blocks[0].kind == BlockKind::text);
  CHECK(localized(t.sections[0].blocks[0].content, "de") == "Prove it.");
  const Block* k = t.find_block("k");
  REQUIRE(k != nullptr);
  CHECK(k->editable());
  // trailing newline of the multi-line literal is trimmed
  CHECK(k->initial == "lemma x: \"A ⟶ A\"\n  sorry");
}

TEST_CASE("load: bundled conjunction tutorial has three sections and five tasks") {
  Tutorial t = conjunction();
  CHECK(t.sections.size() == 3);
  CHECK(t.task_blocks().size() == 5);
  CHECK(t.profile == "natural-deduction");
  CHECK(localized(t.title, "de") == "Konjunktion");
  CHECK(localized(t.title, "fr") == "Conjunction");
}

TEST_CASE("load: rejects malformed documents") {
  std::string doc = kMinimal;
  CHECK(load_error(replace_once(doc, "footer = \"end\"\n", "")) == Errc::format_error);
  CHECK(load_error(replace_once(doc, "imports = \"Main\"", "imports = \"Main\"\ncolour = \"red\"")) ==
        Errc::format_error);
  CHECK(load_error(replace_once(doc, "kind = \"task\"", "kind = \"puzzle\"")) == Errc::format_error);
  CHECK(load_error(replace_once(doc, "id = \"k\"", "id = \"t\"")) == Errc::invariant_violation);
  CHECK(load_error("id = \"unterminated") == Errc::format_error);

  try {
    load_tutorial(replace_once(doc, "id = \"k\"", "id = \"t\""));
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("'t'") != std::string::npos);
  }
  try {
    load_tutorial(replace_once(doc, "imports = \"Main\"", "imports = \"Main\"\ncolour = \"red\""));
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 6") != std::string::npos);
  }
}

TEST_CASE("assemble: header, code blocks and footer joined by single newlines") {
  Tutorial t = load_tutorial(kMinimal);
  TutorialState s = fresh_state(t, "u");
  AssembledTheory a = assemble_theory(t, s);
  CHECK(a.text == "theory Mini imports Main begin\nlemma x: \"A ⟶ A\"\n  sorry\nend");
  REQUIRE(a.segments.size() == 5);
  CHECK(a.segments[0].origin == SegmentOrigin::hidden);
  CHECK(a.segments[1].origin == SegmentOrigin::separator);
  CHECK(a.segments[2].block_id == "k");
  CHECK(a.segments[4].origin == SegmentOrigin::hidden);

  AssembledTheory with = assemble_theory(t, s, "lemmas andE = conjE\n\n");
  CHECK(with.text.starts_with("theory Mini imports Main begin\nlemmas andE = conjE\nlemma x"));
}

TEST_CASE("assemble: rejects a state of another tutorial") {
  Tutorial t = load_tutorial(kMinimal);
  TutorialState s = fresh_state(t, "u");
  s.tutorial_id = "other";
  CHECK_THROWS_AS(assemble_theory(t, s), Error);
  try {
    check_state(t, s);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::mismatch);
  }
  TutorialState extra = fresh_state(t, "u");
  extra.contents["ghost"] = "";
  try {
    check_state(t, extra);
    FAIL("expected mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::mismatch);
  }
}

TEST_CASE("assemble: conjunction tutorial keeps the hidden definition between tasks") {
  Tutorial t = conjunction();
  AssembledTheory a = assemble_theory(t, fresh_state(t, "u"));
  auto t1 = a.text.find("lemma conj_self");
  auto def = a.text.find("definition both");
  auto t2 = a.text.find("lemma both_intro");
  REQUIRE(t1 != std::string::npos);
  REQUIRE(def != std::string::npos);
  REQUIRE(t2 != std::string::npos);
  CHECK(t1 < def);
  CHECK(def < t2);
  CHECK(map_span(a, {def, def + 10}).hidden);
  CHECK(a.text.ends_with("\nend"));
}

TEST_CASE("map_span: worked cases") {
  Tutorial t = load_tutorial(kMinimal);
  TutorialState s = fresh_state(t, "u");
  s.contents["k"] = "abc";
  AssembledTheory a = assemble_theory(t, s);
  // "theory Mini imports Main begin" is 30 bytes, task at [31, 34)
  const std::size_t task = 31;
  REQUIRE(a.text.substr(task, 3) == "abc");

  CHECK(map_span(a, {task + 1, task + 2}) == MappedSpan{false, "k", {1, 2}, false});
  CHECK(map_span(a, {0, 6}).hidden);
  CHECK(map_span(a, {task + 3, task + 4}) == MappedSpan{true, {}, {}, false});
  // zero-length span on the separator belongs to the following segment
  CHECK(map_span(a, {task - 1, task - 1}) == MappedSpan{false, "k", {0, 0}, false});
  CHECK(map_span(a, {task + 3, task + 3}).hidden);
  // a span reaching into the footer touches hidden content
  CHECK(map_span(a, {task + 1, task + 6}).hidden);
  // end of the text belongs to the footer
  CHECK(map_span(a, {a.text.size(), a.text.size()}).hidden);

  try {
    map_span(a, {0, a.text.size() + 1});
    FAIL("expected out_of_range");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::out_of_range);
  }
  CHECK_THROWS_AS(map_span(a, {5, 4}), Error);
}

TEST_CASE("map_span: span across two visible blocks is clipped to the first") {
  Tutorial t = load_tutorial(kMinimal);
  Block second;
  second.id = "k2";
  second.kind = BlockKind::task;
  t.sections[0].blocks.push_back(second);
  TutorialState s = fresh_state(t, "u");
  s.contents["k"] = "abc";
  s.contents["k2"] = "xyz";
  AssembledTheory a = assemble_theory(t, s);
  std::size_t first = a.text.find("abc");
  MappedSpan m = map_span(a, {first + 1, first + 6});
  CHECK(m == MappedSpan{false, "k", {1, 3}, true});
}

TEST_CASE("reset_progress: equals a fresh state and is idempotent") {
  Tutorial t = conjunction();
  TutorialState s = fresh_state(t, "alice");
  s.contents["t1"] = "lemma conj_self: \"A ⟹ A ∧ A\"\n  by (rule andI)";
  s.outcomes["t1"] = Outcome::ok;
  TutorialState once = reset_progress(s, t);
  CHECK(once == fresh_state(t, "alice"));
  CHECK(reset_progress(once, t) == once);
  CHECK(assemble_theory(t, once).text == assemble_theory(t, fresh_state(t, "bob")).text);
  for (const auto& [id, o] : once.outcomes) CHECK(o == Outcome::unchecked);
}

TEST_CASE("outcome names round-trip") {
  for (Outcome o : {Outcome::unchecked, Outcome::ok, Outcome::failed}) {
    CHECK(outcome_from_string(to_string(o)) == o);
  }
  CHECK_THROWS(outcome_from_string("finished"));
}

TEST_CASE("validate: bundled tutorials are clean") {
  for (const char* name : {"tutorials/conjunction.toml", "tutorials/first_order.toml", "tutorials/lists.toml"}) {
    Tutorial t = load_tutorial(test::read_source(name));
    const auto* profile = syntax::find_bundled_profile(t.profile);
    REQUIRE(profile != nullptr);
    CHECK(validate_tutorial(t, *profile).empty());
  }
}

TEST_CASE("validate: restricted initial content and broken hidden code") {
  Tutorial t = conjunction();
  const auto* nd = syntax::find_bundled_profile("natural-deduction");
  REQUIRE(nd != nullptr);

  Tutorial bad = t;
  for (auto& sec : bad.sections) {
    for (auto& b : sec.blocks) {
      if (b.id == "t1") b.initial = "lemma l: \"A\" by auto";
      if (b.id == "def-both") b.code = "definition both where ‹unterminated";
    }
  }
  auto diags = validate_tutorial(bad, *nd);
  auto restriction = std::find_if(diags.begin(), diags.end(), [](const auto& d) {
    return d.layer == syntax::Layer::restriction;
  });
  REQUIRE(restriction != diags.end());
  CHECK(restriction->block_id == "t1");
  CHECK(restriction->span == SourceSpan{16, 20});
  auto outline = std::find_if(diags.begin(), diags.end(), [](const auto& d) {
    return d.layer == syntax::Layer::outer_syntax && d.block_id == "def-both";
  });
  CHECK(outline != diags.end());

  // restrictions do not apply to example code
  Tutorial example = t;
  for (auto& sec : example.sections) {
    for (auto& b : sec.blocks) {
      if (b.id == "ex-andI") b.code = "lemma l: \"A\" by auto";
    }
  }
  CHECK(validate_tutorial(example, *nd).empty());

  Tutorial dup = t;
  dup.sections[1].blocks[0].id = "t1";
  diags = validate_tutorial(dup, *nd);
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].code == "duplicate-block-id");
}

TEST_CASE("property: segments cover the theory and match a naive join") {
  test::Rng rng(0x5eed01);
  for (int i = 0; i < 150; ++i) {
    Tutorial t = test::random_tutorial(rng, i);
    TutorialState s = test::random_state(rng, t);
    std::string preamble = i % 3 == 0 ? "lemmas andE = conjE\n" : "";
    AssembledTheory a = assemble_theory(t, s, preamble);
    auto parts = test::oracle_parts(t, s, preamble);
    REQUIRE(a.text == test::oracle_join(parts));

    std::size_t at = 0;
    for (const Segment& seg : a.segments) {
      CHECK(seg.span.start == at);
      at = seg.span.end;
    }
    CHECK(at == a.text.size());

    // every byte maps to the origin the naive join predicts
    for (std::size_t p = 0; p < a.text.size(); ++p) {
      MappedSpan m = map_span(a, {p, p + 1});
      test::OracleOrigin expect = test::oracle_origin(parts, p);
      INFO("tutorial ", i, " offset ", p);
      CHECK(m.hidden == expect.hidden);
      if (!expect.hidden) {
        CHECK(m.block_id == expect.block_id);
        CHECK(m.local.start == expect.local);
      }
    }

    // task fidelity: the block segment is the user content verbatim
    for (const Segment& seg : a.segments) {
      if (seg.origin == SegmentOrigin::block && seg.block_kind == BlockKind::task) {
        CHECK(a.text.substr(seg.span.start, seg.span.length()) == s.contents.at(seg.block_id));
      }
    }
  }
}

TEST_CASE("property: editing one task leaves everything before it unchanged") {
  test::Rng rng(0x5eed02);
  int edited = 0;
  for (int i = 0; i < 150; ++i) {
    Tutorial t = test::random_tutorial(rng, i);
    auto tasks = t.task_blocks();
    if (tasks.empty()) continue;
    TutorialState s = test::random_state(rng, t);
    AssembledTheory before = assemble_theory(t, s);
    const Block* target = tasks[test::uniform(rng, 0, tasks.size() - 1)];
    TutorialState changed = s;
    changed.contents[target->id] = test::random_edit(rng, s.contents[target->id]);
    AssembledTheory after = assemble_theory(t, changed);

    auto seg_of = [&](const AssembledTheory& a) {
      return *std::find_if(a.segments.begin(), a.segments.end(),
                           [&](const Segment& g) { return g.block_id == target->id; });
    };
    Segment sb = seg_of(before);
    Segment sa = seg_of(after);
    CHECK(sb.span.start == sa.span.start);
    CHECK(before.text.substr(0, sb.span.start) == after.text.substr(0, sa.span.start));
    CHECK(before.text.substr(sb.span.end) == after.text.substr(sa.span.end));
    ++edited;
  }
  CHECK(edited > 80);
}
