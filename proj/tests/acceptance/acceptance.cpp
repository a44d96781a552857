// Runs every primary acceptance criterion and prints one PASS/FAIL line
// per criterion. Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "api/service.hpp"
#include "api_harness.hpp"
#include "common/error.hpp"
#include "feedback/hints.hpp"
#include "feedback/rules.hpp"
#include "prover/pool.hpp"
#include "store/history.hpp"
#include "support.hpp"
#include "syntax/lexer.hpp"
#include "syntax/outline.hpp"
#include "syntax/profile.hpp"
#include "syntax/restrictions.hpp"
#include "tutorial/tutorial.hpp"
#include "tutorial_gen.hpp"

using namespace pb;
using namespace std::chrono_literals;
using nlohmann::json;

namespace {

// Collects the first few failures of one criterion.
struct Verdict {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
  }
  bool passed() const { return failures.empty(); }
};

std::string conjunction_theory(const std::string& solution) {
  auto t = tutorial::load_tutorial(test::read_source("tutorials/conjunction.toml"));
  auto state = store::state_from_json(test::read_source("tutorials/solutions/" + solution));
  return tutorial::assemble_theory(t, state, feedback::bundled_rules().alias_declarations()).text;
}

std::shared_ptr<prover::InProcessLauncher> fixture_launcher() {
  prover::MockOptions options;
  options.mode = prover::MockMode::fixture;
  options.fixtures = std::make_shared<const prover::FixtureSet>(
      prover::FixtureSet::load_file(test::source_path("tutorials/fixtures.json").string()));
  return std::make_shared<prover::InProcessLauncher>(options);
}

prover::PoolConfig stress_config() {
  prover::PoolConfig c;
  c.initial = 30;
  c.max = 30;
  c.session_cap = 10;
  c.check_timeout = 10s;
  return c;
}

void pool_stress(Verdict& v) {
  auto started = std::chrono::steady_clock::now();
  const std::string theory = conjunction_theory("conjunction.correct.json");

  // 300 concurrent acquire/check/release cycles
  {
    prover::Pool pool(stress_config(), fixture_launcher());
    v.expect(pool.status().count(prover::InstanceState::healthy) == 30, "30 healthy instances at start");
    std::atomic<int> ok{0};
    std::atomic<int> failed{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 30; ++t) {
      threads.emplace_back([&] {
        for (int i = 0; i < 10; ++i) {
          try {
            auto h = pool.acquire_session();
            auto r = pool.check_theory(h, theory);
            pool.release_session(h);
            (r.status == prover::ResultStatus::finished_ok ? ok : failed)++;
          } catch (const std::exception&) {
            ++failed;
          }
        }
      });
    }
    for (auto& th : threads) th.join();
    v.expect(ok == 300, "all 300 cycles finished ok (" + std::to_string(ok.load()) + ")");
    v.expect(failed == 0, "no failed cycles");
    v.expect(pool.protocol_errors() == 0, "zero protocol errors");
    v.expect(pool.total_active_sessions() == 0, "session counts return to zero");
    std::uint64_t acquisitions = 0;
    for (const auto& i : pool.status().instances) {
      acquisitions += i.acquisitions;
      v.expect(i.active_sessions == 0, "instance idle after the run");
    }
    v.expect(acquisitions == 300, "acquisitions sum to the cycles run");
  }

  // balanced: nothing is released, so least-loaded dispatch spreads evenly
  {
    prover::Pool pool(stress_config(), fixture_launcher());
    std::mutex mutex;
    std::vector<prover::SessionHandle> held;
    std::vector<std::thread> threads;
    for (int t = 0; t < 30; ++t) {
      threads.emplace_back([&] {
        for (int i = 0; i < 10; ++i) {
          auto h = pool.acquire_session();
          std::lock_guard lock(mutex);
          held.push_back(h);
        }
      });
    }
    for (auto& th : threads) th.join();
    std::uint64_t lo = UINT64_MAX, hi = 0;
    for (const auto& i : pool.status().instances) {
      lo = std::min(lo, i.acquisitions);
      hi = std::max(hi, i.acquisitions);
    }
    v.expect(hi - lo <= 1, "acquisition spread " + std::to_string(hi - lo) + " <= 1");
    v.expect(pool.total_active_sessions() == 300, "300 sessions held");
    for (const auto& h : held) pool.release_session(h);
    v.expect(pool.total_active_sessions() == 0, "all sessions released");
  }
  auto seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  v.expect(seconds < 60, "runtime under 60 s");
}

void default_sizing(Verdict& v) {
  for (auto [roster_size, want] : std::vector<std::pair<int, int>>{{25, 2}, {26, 4}}) {
    test::Harness h;
    std::vector<std::string> roster;
    for (int i = 0; i < roster_size; ++i) roster.push_back("student" + std::to_string(i));
    auto r = h.make_course(test::mint("tess", {"teacher"}), "logic", roster);
    v.expect(r.status == 201, "course created");
    int healthy = h.pool->status().count(prover::InstanceState::healthy);
    v.expect(h.pool->target() == want && healthy == want,
             "roster " + std::to_string(roster_size) + " gives " + std::to_string(healthy) + " instances");
  }
}

void lossless_lexing(Verdict& v) {
  static const std::vector<std::string> fragments = {
      "lemma", "theorem", " ", "\n", "foo", "conj_1'", "\"A ∧ B\"", "\"open", "‹c ‹n››", "‹open",
      "\\<open>x\\<close>", "(* c (* n *) *)", "(* open", "by", "apply", "(rule conjI)", "auto",
      "?x", "?x.2", "'a", "HOL.conjI", "42", "\\<forall>", "==>", "⟹", ":", ".", "..", "`",
      "qed", "proof -", "α", "\\", "'", "?", "\t", "\r\n", "🙂", "(*)", "\x80", "\xff", "\xe2\x88"};
  test::Rng rng(0xacce55);
  for (int i = 0; i < 1000; ++i) {
    std::string text;
    std::size_t n = test::uniform(rng, 0, 60);
    for (std::size_t k = 0; k < n; ++k) text += test::pick(rng, fragments);
    auto tokens = syntax::tokenize(text);
    std::string joined;
    for (const auto& t : tokens) joined += t.text;
    v.expect(joined == text, "generated input " + std::to_string(i) + " is reproduced");
  }

  std::size_t files = 0;
  for (const auto& entry :
       std::filesystem::directory_iterator(test::source_path("tests/data/golden"))) {
    if (entry.path().extension() != ".thy") continue;
    ++files;
    std::string text = test::read_file(entry.path());
    auto path = entry.path();
    std::istringstream frozen(test::read_file(path.replace_extension(".tokens")));
    std::vector<std::string> want;
    std::string line;
    while (std::getline(frozen, line)) {
      if (line.empty()) continue;
      want.push_back(line.substr(0, line.find('\t', line.find('\t', line.find('\t') + 1) + 1)));
    }
    std::vector<std::string> got;
    for (const auto& t : syntax::tokenize(text)) {
      got.push_back(std::string(syntax::to_string(t.kind)) + "\t" + std::to_string(t.span.start) +
                    "\t" + std::to_string(t.span.end));
    }
    v.expect(got == want, entry.path().filename().string() + " matches its frozen stream");
  }
  v.expect(files >= 20, "golden corpus has at least 20 snippets");
}

void restriction_enforcement(Verdict& v) {
  const syntax::SyntaxProfile* p = syntax::find_bundled_profile("natural-deduction");
  v.expect(p != nullptr, "natural-deduction profile bundled");
  if (p == nullptr) return;
  auto restriction_count = [&](const std::string& text) {
    auto diagnostics = syntax::check_restrictions(syntax::outline(syntax::tokenize(text)).commands, *p);
    return std::count_if(diagnostics.begin(), diagnostics.end(),
                         [](const auto& d) { return d.layer == syntax::Layer::restriction; });
  };
  for (const std::string tactic : {"auto", "simp", "blast"}) {
    v.expect(restriction_count("lemma l: \"A\"\n  by " + tactic) == 1, "by " + tactic);
    v.expect(restriction_count("lemma l: \"A\"\n  apply " + tactic + "\n  done") == 1, "apply " + tactic);
    v.expect(restriction_count("lemma l: \"" + tactic + "\"\n  by assumption") == 0,
             tactic + " inside a string literal");
  }
}

void span_map(Verdict& v) {
  test::Rng rng(0x5a9e);
  for (int i = 0; i < 100; ++i) {
    auto t = test::random_tutorial(rng, i);
    auto s = test::random_state(rng, t);
    std::string preamble = i % 2 == 0 ? feedback::bundled_rules().alias_declarations() : "";
    auto a = tutorial::assemble_theory(t, s, preamble);
    auto parts = test::oracle_parts(t, s, preamble);
    v.expect(a.text == test::oracle_join(parts), "assembly matches the naive join");
    for (std::size_t p = 0; p < a.text.size(); ++p) {
      auto m = tutorial::map_span(a, {p, p + 1});
      auto want = test::oracle_origin(parts, p);
      bool ok = !m.multi_segment && m.hidden == want.hidden &&
                (want.hidden ? m.block_id.empty() : m.block_id == want.block_id && m.local.start == want.local);
      v.expect(ok, "tutorial " + std::to_string(i) + " offset " + std::to_string(p));
    }
    for (const auto& seg : a.segments) {
      if (seg.origin == tutorial::SegmentOrigin::block && seg.block_kind == tutorial::BlockKind::task) {
        v.expect(a.text.substr(seg.span.start, seg.span.length()) == s.contents.at(seg.block_id),
                 "task " + seg.block_id + " verbatim");
      }
    }
  }
}

void diff_round_trip(Verdict& v) {
  auto t = tutorial::load_tutorial(test::read_source("tutorials/conjunction.toml"));
  auto mem = std::make_shared<store::MemoryStore>();
  store::History history(mem);
  test::Rng rng(0xd1ff);
  const std::vector<std::string> tasks = {"t1", "t2", "t3", "t4", "t5"};
  for (int sequence = 0; sequence < 1000; ++sequence) {
    std::string user = "u-" + std::to_string(sequence);
    mem->put_profile({user, "user" + std::to_string(sequence), test::kIssuer, false, 0});
  }
  for (const std::string& block : tasks) {
    for (int sequence = 0; sequence < 1000; ++sequence) {
      std::string user = "u-" + std::to_string(sequence);
      // full-text oracle: texts[k] is the content after recorded submission k
      std::vector<std::string> texts = {""};
      std::string current = test::random_text(rng, 20);
      std::size_t edits = test::uniform(rng, 1, 12);
      for (std::size_t e = 0; e < edits; ++e) {
        auto recorded = history.record_submission(user, "logic", t, block, current, sequence * 100 + e);
        if (recorded) {
          v.expect(recorded->seq == texts.size(), "dense sequence numbers");
          texts.push_back(current);
        }
        current = test::random_edit(rng, current);
      }
      store::StreamKey key{user, t.id, block};
      if (texts.size() == 1) {
        // every submission was empty, so no stream was ever opened
        bool missing = false;
        try {
          history.reconstruct(key);
        } catch (const Error& e) {
          missing = e.code() == Errc::not_found;
        }
        v.expect(missing, "an unrecorded stream is not found");
        continue;
      }
      v.expect(history.reconstruct(key) == texts.back(), "latest reconstructs the final text");
      std::uint64_t k = test::uniform(rng, 0, texts.size() - 1);
      v.expect(history.reconstruct(key, k) == texts[k], "reconstruct(k) equals the k-th text");
    }
  }
}

// Fields of every JSON object that names `user_id`.
void scan_for_identity(const json& j, const std::string& user_id, const std::string& username,
                       const std::string& issuer, Verdict& v, const std::string& where) {
  if (j.is_object()) {
    bool names_user = false;
    for (const auto& [k, value] : j.items()) names_user |= value.is_string() && value == user_id;
    for (const auto& [k, value] : j.items()) {
      if (names_user && value.is_string()) {
        v.expect(value != username && value != issuer, where + " exposes " + k);
      }
      scan_for_identity(value, user_id, username, issuer, v, where);
    }
  } else if (j.is_array()) {
    for (const auto& item : j) scan_for_identity(item, user_id, username, issuer, v, where);
  }
}

void anonymization(Verdict& v) {
  test::Harness h;
  const std::string username = "zoe-anon";
  std::string tess = test::mint("tess", {"teacher"});
  std::string ada = test::mint("ada", {"admin"});
  std::string zoe = test::mint(username, {"student"});
  std::string zoe_id = h.service->authenticate(zoe).user_id;
  h.make_course(tess, "logic", {username, "sam"});
  std::string check_id =
      h.json_of(h.call("POST", "/v1/checks", zoe,
                       {{"tutorial_id", "conjunction"},
                        {"blocks", test::solution_blocks("conjunction.broken.json")}}))["request_id"];
  h.service->wait_idle();
  std::string before = h.call("GET", "/v1/export", ada).body;
  v.expect(!before.empty(), "submissions recorded");

  v.expect(h.call("DELETE", "/v1/admin/users/" + zoe_id, ada).status == 204, "delete_user succeeds");

  std::map<std::string, std::string> callers = {
      {"teacher", tess}, {"admin", ada}, {"student", test::mint("sam", {"student"})}};
  int serial = 0;
  for (const api::Endpoint& e : api::endpoints()) {
    for (const auto& [role, token] : callers) {
      api::HttpRequest r = test::sample_request(e, serial++);
      if (e.path == "/v1/checks/{id}") r.target = "/v1/checks/" + check_id;
      if (e.path == "/v1/admin/users/{id}") r.target = "/v1/admin/users/" + zoe_id;
      r.authorization = "Bearer " + token;
      auto response = h.service->handle(r);
      std::string where = e.method + " " + e.path + " as " + role;
      v.expect(response.body.find(username) == std::string::npos, where + " leaks the username");
      std::istringstream lines(response.body);
      std::string line;
      while (std::getline(lines, line)) {
        json j = json::parse(line, nullptr, false);
        if (!j.is_discarded()) scan_for_identity(j, zoe_id, username, test::kIssuer, v, where);
      }
    }
  }
  h.service->wait_idle();

  store::ExportFilter all;
  auto diffs = h.service->history().export_history(all);
  std::size_t zoe_diffs = std::count_if(diffs.begin(), diffs.end(),
                                        [&](const auto& d) { return d.user_id == zoe_id; });
  v.expect(zoe_diffs == 5, "diffs kept under the opaque id (" + std::to_string(zoe_diffs) + ")");
  std::string after = h.call("GET", "/v1/export", ada).body;
  v.expect(after.find(zoe_id) != std::string::npos, "export still lists the opaque id");
  v.expect(after.find(before) == 0, "earlier export lines are unchanged");
}

void end_to_end(Verdict& v) {
  test::Harness h;
  std::string tess = test::mint("tess", {"teacher"});
  h.make_course(tess, "logic", {"sam"});
  std::string sam = test::mint("sam", {"student"});

  json ok = h.check(sam, {{"tutorial_id", "conjunction"},
                          {"blocks", test::solution_blocks("conjunction.correct.json")}});
  v.expect(ok["status"] == "finished-ok", "correct solution finishes ok");
  v.expect(ok["outcomes"].size() == 5, "all five tasks have an outcome");
  for (const auto& [block, outcome] : ok["outcomes"].items()) v.expect(outcome == "ok", block + " ok");

  json bad = h.check(sam, {{"tutorial_id", "conjunction"},
                           {"blocks", test::solution_blocks("conjunction.broken.json")}});
  v.expect(bad["status"] == "finished-failed", "broken solution fails");
  v.expect(bad["outcomes"]["t1"] == "failed", "t1 failed");
  v.expect(bad["feedback"].size() == 1, "one feedback item");
  if (bad["feedback"].empty()) return;
  json item = bad["feedback"][0];
  v.expect(item["block_id"] == "t1" && !item["span"].is_null(), "error scoped to block t1");
  v.expect(item["severity"] == "error", "item is an error");
  const feedback::HintRule* rule = nullptr;
  for (const auto& r : feedback::bundled_hints().rules()) {
    if (r.id == "failed-proof-method") rule = &r;
  }
  v.expect(rule != nullptr, "failed-proof-method hints are bundled");
  if (rule != nullptr) v.expect(item["hints"] == json(rule->hints_for("en")), "failed-proof-method hints attached");
}

void rbac_sweep(Verdict& v) {
  test::Harness h;
  std::string teacher = test::mint("tess", {"teacher"});
  h.make_course(teacher, "logic", {"sam"});
  std::vector<std::pair<std::optional<api::Role>, std::string>> callers = {
      {std::nullopt, ""},
      {api::Role::student, test::mint("sam", {"student"})},
      {api::Role::teacher, teacher},
      {api::Role::admin, test::mint("ada", {"admin"})},
  };
  int serial = 0;
  for (const api::Endpoint& e : api::endpoints()) {
    for (const auto& [role, token] : callers) {
      api::HttpRequest r = test::sample_request(e, serial++);
      if (!token.empty()) r.authorization = "Bearer " + token;
      int status = h.service->handle(r).status;
      std::string where = e.method + " " + e.path + " as " +
                          (role ? std::string(api::to_string(*role)) : "anonymous") + " -> " +
                          std::to_string(status);
      if (!role) {
        v.expect(status == 401, where);
      } else if (static_cast<int>(*role) < static_cast<int>(e.minimum)) {
        v.expect(status == 403, where);
      } else {
        v.expect(status != 401 && status != 403 && status < 500, where);
      }
    }
  }
  h.service->wait_idle();
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria = {
      {"pool stress: 30 instances, 300 concurrent cycles", pool_stress},
      {"default sizing: roster 25 gives 2 instances, 26 gives 4", default_sizing},
      {"lossless lexing: 1000 generated inputs and the golden corpus", lossless_lexing},
      {"restriction enforcement: auto, simp and blast", restriction_enforcement},
      {"span map: 100 random tutorials, every byte offset", span_map},
      {"diff round-trip: 1000 edit sequences per block", diff_round_trip},
      {"anonymization: endpoint sweep after delete_user", anonymization},
      {"end-to-end fixture: conjunction solutions", end_to_end},
      {"rbac sweep: endpoints x anonymous, student, teacher, admin", rbac_sweep},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      run(v);
    } catch (const std::exception& e) {
      v.failures.push_back(std::string("exception: ") + e.what());
    }
    std::printf("%s %s\n", v.passed() ? "PASS" : "FAIL", name.c_str());
    for (const auto& f : v.failures) std::printf("    %s\n", f.c_str());
    failed += v.passed() ? 0 : 1;
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
