#include <algorithm>
#include <thread>

#include "common/error.hpp"
#include "doctest.h"
#include "json.hpp"
#include "store/diff.hpp"
#include "store/history.hpp"
#include "store/store.hpp"
#include "support.hpp"
#include "tutorial/tutorial.hpp"

using namespace pb;
using namespace pb::store;

namespace {

std::vector<std::string> code_points(std::string_view s) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < s.size();) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len = c >= 0xF0 ? 4 : c >= 0xE0 ? 3 : c >= 0xC0 ? 2 : 1;
    out.emplace_back(s.substr(i, len));
    i += len;
  }
  return out;
}

// Minimal number of inserted plus deleted code points, by LCS dynamic
// programming.
std::size_t min_edits(std::string_view a, std::string_view b) {
  auto x = code_points(a);
  auto y = code_points(b);
  std::vector<std::vector<std::size_t>> lcs(x.size() + 1, std::vector<std::size_t>(y.size() + 1, 0));
  for (std::size_t i = 1; i <= x.size(); ++i) {
    for (std::size_t j = 1; j <= y.size(); ++j) {
      lcs[i][j] = x[i - 1] == y[j - 1] ? lcs[i - 1][j - 1] + 1 : std::max(lcs[i - 1][j], lcs[i][j - 1]);
    }
  }
  return x.size() + y.size() - 2 * lcs[x.size()][y.size()];
}

std::size_t script_edits(const EditScript& s) {
  std::size_t n = 0;
  for (const auto& op : s) {
    if (op.kind == OpKind::remove) n += op.count;
    if (op.kind == OpKind::insert) n += code_points(op.text).size();
  }
  return n;
}

void check_well_formed(const EditScript& s, std::string_view from) {
  std::size_t consumed = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const EditOp& op = s[i];
    if (op.kind == OpKind::insert) CHECK_FALSE(op.text.empty());
    else CHECK(op.count > 0);
    if (i > 0) CHECK(s[i - 1].kind != op.kind);
    if (op.kind != OpKind::insert) consumed += op.count;
  }
  CHECK(consumed == code_points(from).size());
}

Errc error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::ok;
}

tutorial::Tutorial conjunction() {
  return tutorial::load_tutorial(test::read_source("tutorials/conjunction.toml"));
}

std::shared_ptr<Store> with_users(std::shared_ptr<Store> s) {
  s->put_profile({"u-1", "alice", "https://idp.example", false, 1});
  s->put_profile({"u-2", "bob", "https://idp.example", false, 2});
  return s;
}

}  // namespace

TEST_CASE("edit_script: worked examples") {
  CHECK(edit_script("", "") == EditScript{});
  CHECK(edit_script("", "hi") == EditScript{EditOp::insert("hi")});
  CHECK(edit_script("hi", "") == EditScript{EditOp::remove(2)});
  CHECK(edit_script("same", "same") == EditScript{EditOp::retain(4)});
  CHECK(edit_script("abc", "abXc") == EditScript{EditOp::retain(2), EditOp::insert("X"), EditOp::retain(1)});
  // counts are code points, not bytes
  CHECK(edit_script("A ∧ B", "A ∨ B") ==
        EditScript{EditOp::retain(2), EditOp::remove(1), EditOp::insert("∨"), EditOp::retain(2)});
  CHECK(apply_script("A ∧ B", edit_script("A ∧ B", "🙂")) == "🙂");
}

TEST_CASE("edit_script: rejects bad input") {
  CHECK(error_code([] { edit_script("\xff", "a"); }) == Errc::invalid_argument);
  CHECK(error_code([] { apply_script("abc", {EditOp::retain(2)}); }) == Errc::invariant_violation);
  CHECK(error_code([] { apply_script("abc", {EditOp::retain(4)}); }) == Errc::invariant_violation);
  CHECK(error_code([] { apply_script("ab", {EditOp::remove(3)}); }) == Errc::invariant_violation);
}

TEST_CASE("property: scripts round-trip and are minimal on small inputs") {
  test::Rng rng(0xd1ff);
  for (int i = 0; i < 1500; ++i) {
    std::string a = test::random_text(rng, 30);
    std::string b = i % 2 == 0 ? test::random_edit(rng, a) : test::random_text(rng, 30);
    EditScript s = edit_script(a, b);
    INFO("from=", a, " to=", b);
    REQUIRE(apply_script(a, s) == b);
    check_well_formed(s, a);
    CHECK(script_edits(s) == min_edits(a, b));
  }
}

TEST_CASE("edit_script: large unrelated inputs stay correct") {
  test::Rng rng(99);
  std::string a, b;
  for (int i = 0; i < 400; ++i) a += test::random_text(rng, 20);
  for (int i = 0; i < 400; ++i) b += test::random_text(rng, 20);
  EditScript s = edit_script(a, b);
  CHECK(apply_script(a, s) == b);
  check_well_formed(s, a);
}

TEST_CASE("json forms round-trip") {
  EditScript ops{EditOp::retain(3), EditOp::remove(1), EditOp::insert("\"∧\"\n")};
  CHECK(ops_to_json(ops) == R"([{"retain":3},{"delete":1},{"insert":"\"∧\"\n"}])");
  CHECK(ops_from_json(ops_to_json(ops)) == ops);
  CHECK(error_code([] { ops_from_json(R"([{"keep":1}])"); }) != Errc::ok);

  Course c;
  c.id = "logic";
  c.title = {{"en", "Logic"}, {"de", "Logik"}};
  c.profile = "natural-deduction";
  c.tutorials = {"conjunction", "lists"};
  c.roster = {"u-1", "u-2"};
  c.owner = "t-1";
  CHECK(course_from_json(course_to_json(c)) == c);

  auto t = conjunction();
  auto st = tutorial::fresh_state(t, "u-1");
  st.outcomes["t3"] = tutorial::Outcome::failed;
  CHECK(state_from_json(state_to_json(st)) == st);

  Course bad = c;
  bad.tutorials.push_back("lists");
  CHECK(error_code([&] { validate_course(bad); }) == Errc::invariant_violation);
  bad = c;
  bad.locales.clear();
  CHECK(error_code([&] { validate_course(bad); }) == Errc::invariant_violation);
}

TEST_CASE("export record has fixed key order and raw UTF-8") {
  SubmissionDiff d{"u-1", "logic", "conjunction", "t1", 2, 1792397730123,
                   {EditOp::retain(31), EditOp::remove(5), EditOp::insert("by (rule andI) ∧")}};
  CHECK(format_timestamp(1792397730123) == "2026-10-19T08:15:30.123Z");
  CHECK(export_record(d) ==
        R"({"user_id":"u-1","course_id":"logic","tutorial_id":"conjunction","block_id":"t1",)"
        R"("seq":2,"ts":"2026-10-19T08:15:30.123Z","ops":[{"retain":31},{"delete":5},{"insert":"by (rule andI) ∧"}]})");
  CHECK(format_timestamp(0) == "1970-01-01T00:00:00.000Z");
}

TEST_CASE("export filter bounds") {
  SubmissionDiff d{"u", "c", "t", "b", 1, 1000, {}};
  ExportFilter f;
  CHECK(f.accepts(d));
  f.from = 1000;
  CHECK(f.accepts(d));
  f.to = 1000;
  CHECK_FALSE(f.accepts(d));
  f.to = 1001;
  CHECK(f.accepts(d));
  f.course_id = "other";
  CHECK_FALSE(f.accepts(d));
  f.course_id = "c";
  f.tutorial_id = "t";
  CHECK(f.accepts(d));
}

TEST_CASE("history: record, skip unchanged, reconstruct") {
  auto t = conjunction();
  History h(with_users(std::make_shared<MemoryStore>()));
  std::vector<std::string> versions = {"lemma a", "lemma a: \"A\"", "lemma a: \"A ∧ B\"\n  by (rule andI)", ""};
  std::uint64_t seq = 0;
  for (std::size_t i = 0; i < versions.size(); ++i) {
    auto d = h.record_submission("u-1", "logic", t, "t1", versions[i], 1000 + static_cast<Millis>(i));
    REQUIRE(d.has_value());
    CHECK(d->seq == ++seq);
    CHECK(d->course_id == "logic");
  }
  CHECK_FALSE(h.record_submission("u-1", "logic", t, "t1", "", 5000).has_value());

  StreamKey key{"u-1", "conjunction", "t1"};
  CHECK(h.reconstruct(key, 0) == "");
  for (std::size_t i = 0; i < versions.size(); ++i) {
    CHECK(h.reconstruct(key, i + 1) == versions[i]);
  }
  CHECK(h.reconstruct(key) == "");
  CHECK(error_code([&] { h.reconstruct(key, 9); }) == Errc::out_of_range);
  CHECK(error_code([&] { h.reconstruct({"u-1", "conjunction", "t2"}); }) == Errc::not_found);

  CHECK(error_code([&] { h.record_submission("ghost", "", t, "t1", "x", 1); }) == Errc::unknown_user);
  CHECK(error_code([&] { h.record_submission("u-1", "", t, "intro", "x", 1); }) == Errc::not_found);
  CHECK(error_code([&] { h.record_submission("u-1", "", t, "def-both", "x", 1); }) == Errc::not_found);
  CHECK(error_code([&] { h.record_submission("u-1", "", t, "t1", "\xc3", 1); }) == Errc::invalid_argument);

  History noop(with_users(std::make_shared<MemoryStore>()), HistoryOptions{true});
  noop.record_submission("u-1", "", t, "t1", "x", 1);
  auto again = noop.record_submission("u-1", "", t, "t1", "x", 2);
  REQUIRE(again.has_value());
  CHECK(again->ops == EditScript{EditOp::retain(1)});
}

TEST_CASE("history: appends must be dense per stream") {
  MemoryStore s;
  SubmissionDiff d{"u", "", "t", "b", 2, 0, {}};
  CHECK(error_code([&] { s.append_diff(d); }) == Errc::invariant_violation);
  d.seq = 1;
  s.append_diff(d);
  CHECK(error_code([&] { s.append_diff(d); }) == Errc::invariant_violation);
}

TEST_CASE("history: concurrent writers keep streams dense") {
  auto t = conjunction();
  History h(with_users(std::make_shared<MemoryStore>()));
  std::vector<std::thread> threads;
  for (int w = 0; w < 8; ++w) {
    threads.emplace_back([&, w] {
      std::string user = w % 2 == 0 ? "u-1" : "u-2";
      std::string block = "t" + std::to_string(1 + w % 3);
      for (int i = 0; i < 40; ++i) {
        h.record_submission(user, "", t, block, "v" + std::to_string(w) + "-" + std::to_string(i), i);
      }
    });
  }
  for (auto& th : threads) th.join();
  std::size_t total = 0;
  for (const char* user : {"u-1", "u-2"}) {
    for (const char* block : {"t1", "t2", "t3"}) {
      auto s = h.store().stream({user, "conjunction", block});
      for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i].seq == i + 1);
      total += s.size();
      if (!s.empty()) {
        std::string last = h.reconstruct({user, "conjunction", block});
        CHECK(last.starts_with("v"));
      }
    }
  }
  CHECK(total == 8 * 40);
}

TEST_CASE("history: deleting a user keeps diffs under the opaque id") {
  auto t = conjunction();
  History h(with_users(std::make_shared<MemoryStore>()));
  h.record_submission("u-1", "logic", t, "t1", "lemma x", 10);
  h.record_submission("u-2", "logic", t, "t1", "lemma y", 20);
  h.record_submission("u-1", "other", t, "t2", "lemma z", 30);

  std::string before = h.export_ndjson({});
  h.delete_user("u-1");
  CHECK_FALSE(h.store().profile("u-1").has_value());
  CHECK(error_code([&] { h.delete_user("u-1"); }) == Errc::unknown_user);
  std::string after = h.export_ndjson({});
  CHECK(after == before);
  CHECK(after.find("alice") == std::string::npos);
  CHECK(after.find("idp.example") == std::string::npos);
  CHECK(std::count(after.begin(), after.end(), '\n') == 3);

  ExportFilter f;
  f.course_id = "logic";
  CHECK(h.export_history(f).size() == 2);
  f = {};
  f.from = 20;
  f.to = 30;
  auto one = h.export_history(f);
  REQUIRE(one.size() == 1);
  CHECK(one[0].user_id == "u-2");
  CHECK(h.export_ndjson(ExportFilter{std::string("none"), {}, {}, {}}) == "");

  for (const auto& line : {after.substr(0, after.find('\n'))}) {
    auto j = nlohmann::json::parse(line);
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    std::sort(keys.begin(), keys.end());
    CHECK(keys == std::vector<std::string>{"block_id", "course_id", "ops", "seq", "ts", "tutorial_id", "user_id"});
  }
}

TEST_CASE("memory and SQLite stores agree") {
  test::TempDir dir;
  std::string path = (dir.path() / "pb.sqlite").string();
  auto mem = std::make_shared<MemoryStore>();
  auto sql = std::make_shared<SqliteStore>(path);
  auto t = conjunction();
  test::Rng rng(4242);

  for (auto s : std::vector<std::shared_ptr<Store>>{mem, sql}) {
    with_users(s);
    s->put_profile({"u-3", "carol", "https://other", true, 3});
    CHECK(s->remove_profile("u-3"));
    CHECK_FALSE(s->remove_profile("u-3"));
    Course c;
    c.id = "logic";
    c.title = {{"en", "Logic"}};
    c.tutorials = {"conjunction"};
    c.roster = {"u-1"};
    s->put_course(c);
    s->put_tutorial_source("conjunction", test::read_source("tutorials/conjunction.toml"));
    auto st = tutorial::fresh_state(t, "u-1");
    st.contents["t2"] = "lemma ∧";
    s->put_state(st);
  }
  History hm(mem), hs(sql);
  for (int i = 0; i < 120; ++i) {
    std::string user = i % 3 == 0 ? "u-2" : "u-1";
    std::string block = "t" + std::to_string(1 + test::uniform(rng, 0, 4));
    std::string course = i % 4 == 0 ? "" : "logic";
    std::string text = test::random_text(rng, 25);
    auto a = hm.record_submission(user, course, t, block, text, 1000 + i);
    auto b = hs.record_submission(user, course, t, block, text, 1000 + i);
    CHECK(a == b);
  }

  CHECK(mem->profiles() == sql->profiles());
  CHECK(sql->find_profile("https://idp.example", "bob")->user_id == "u-2");
  CHECK_FALSE(sql->find_profile("https://other", "bob").has_value());
  CHECK(mem->courses() == sql->courses());
  CHECK(mem->tutorial_ids() == sql->tutorial_ids());
  CHECK(mem->tutorial_source("conjunction") == sql->tutorial_source("conjunction"));
  CHECK(mem->state("u-1", "conjunction") == sql->state("u-1", "conjunction"));
  CHECK_FALSE(sql->state("u-2", "conjunction").has_value());
  CHECK(mem->diffs({}) == sql->diffs({}));
  ExportFilter f;
  f.course_id = "logic";
  f.from = 1050;
  CHECK(mem->diffs(f) == sql->diffs(f));
  CHECK(hm.export_ndjson({}) == hs.export_ndjson({}));

  // the database survives a reopen
  std::string exported = hs.export_ndjson({});
  sql.reset();
  auto reopened = std::make_shared<SqliteStore>(path);
  CHECK(History(reopened).export_ndjson({}) == exported);
  CHECK(reopened->profile("u-1")->username == "alice");

  CHECK(error_code([&] { SqliteStore bad((dir.path() / "missing" / "x.sqlite").string()); }) ==
        Errc::storage_failure);
}
