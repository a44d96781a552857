#include <algorithm>
#include <map>
#include <mutex>

#include "api/app.hpp"
#include "api/jwt.hpp"
#include "api/service.hpp"
#include "api_harness.hpp"
#include "common/error.hpp"
#include "doctest.h"
#include "feedback/enrich.hpp"

using namespace pb;
using namespace pb::api;
using nlohmann::json;
using test::Harness;
using test::kIssuer;
using test::kNow;
using test::mint;

namespace {

Errc error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::ok;
}

TokenVerifier verifier(AuthConfig auth = {}) {
  if (auth.issuers.empty()) auth.issuers = {{kIssuer, test::test_keys().public_pem}};
  return TokenVerifier(std::move(auth));
}

std::string header_b64(const std::string& token) { return token.substr(0, token.find('.')); }

}  // namespace

TEST_CASE("base64url reference vectors") {
  CHECK(base64url_encode("") == "");
  CHECK(base64url_encode("f") == "Zg");
  CHECK(base64url_encode("foobar") == "Zm9vYmFy");
  CHECK(base64url_encode("\xfb\xff") == "-_8");
  CHECK(base64url_decode("-_8") == "\xfb\xff");
  CHECK(error_code([] { base64url_decode("a*b"); }) == Errc::invalid_argument);
  test::Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    std::string s = test::random_text(rng, 20);
    CHECK(base64url_decode(base64url_encode(s)) == s);
  }
}

TEST_CASE("jwt: accepts a valid token and reads claims") {
  Claims c = verifier().verify(mint("alice", {"student"}), kNow);
  CHECK(c.issuer == kIssuer);
  CHECK(c.subject == "sub-alice");
  CHECK(c.username == "alice");
  CHECK(c.roles == std::set<std::string>{"student"});
  CHECK(c.expires_at == kNow + 3600);

  AuthConfig nested;
  nested.roles_claim = "realm_access.roles";
  json claims = {{"iss", kIssuer}, {"sub", "s"}, {"exp", kNow + 10},
                 {"realm_access", {{"roles", {"teacher"}}}}};
  Claims n = verifier(nested).verify(sign_token(claims, test::test_keys().private_pem), kNow);
  CHECK(n.roles == std::set<std::string>{"teacher"});
  CHECK(n.username == "s");
}

TEST_CASE("jwt: rejects expired, foreign, tampered and unsigned tokens") {
  TokenVerifier v = verifier();
  auto rejected = [&](const std::string& token, std::int64_t now = kNow) {
    return error_code([&] { v.verify(token, now); }) == Errc::unauthenticated;
  };
  CHECK(rejected(mint("a", {"student"}, kNow - 31)));
  CHECK_FALSE(rejected(mint("a", {"student"}, kNow - 29)));
  CHECK(rejected(mint("a", {"student"}, kNow + 3600, "https://evil.example")));
  CHECK(rejected(mint("a", {"student"}, kNow + 3600, kIssuer, test::foreign_keys().private_pem)));

  std::string good = mint("a", {"student"});
  std::string tampered = good;
  std::size_t dot = tampered.find('.') + 3;
  tampered[dot] = tampered[dot] == 'A' ? 'B' : 'A';
  CHECK(rejected(tampered));

  std::string none_header = base64url_encode(R"({"alg":"none","typ":"JWT"})");
  std::string unsigned_token = none_header + good.substr(header_b64(good).size(), good.rfind('.') - header_b64(good).size()) + ".";
  CHECK(rejected(unsigned_token));
  CHECK(rejected("not-a-token"));
  CHECK(rejected(""));

  json no_exp = {{"iss", kIssuer}, {"sub", "s"}, {"roles", {"student"}}};
  CHECK(rejected(sign_token(no_exp, test::test_keys().private_pem)));
  CHECK(error_code([] { sign_token(json::object(), "not a key"); }) == Errc::invalid_argument);
}

TEST_CASE("service: authentication and routing errors") {
  Harness h;
  CHECK(h.call("GET", "/v1/courses", "").status == 401);
  CHECK(h.call("GET", "/v1/courses", "garbage").status == 401);
  CHECK(h.call("GET", "/v1/courses", mint("a", {"student"}, kNow - 100)).status == 401);
  CHECK(h.call("GET", "/v1/courses", mint("a", {"guest"})).status == 403);
  CHECK(h.call("GET", "/v1/nowhere", mint("a", {"student"})).status == 404);
  CHECK(h.call("DELETE", "/v1/courses", mint("a", {"admin"})).status == 405);
  auto r = h.call("POST", "/v1/tokenize", mint("a", {"student"}), json{{"txt", 1}});
  CHECK(r.status == 400);
  CHECK(h.json_of(r)["error"]["code"] == "invalid-argument");

  HttpRequest raw{"POST", "/v1/tokenize", "Bearer " + mint("a", {"student"}), "{not json"};
  CHECK(h.service->handle(raw).status == 400);

  // the same login maps to the same opaque user id
  Principal p1 = h.service->authenticate(mint("alice", {"student"}));
  Principal p2 = h.service->authenticate("bearer " + mint("alice", {"student", "teacher"}));
  CHECK(p1.user_id == p2.user_id);
  CHECK(p2.has(Role::student));
  CHECK_FALSE(p1.has(Role::teacher));
  CHECK(h.store->profile(p1.user_id)->username == "alice");
}

TEST_CASE("service: role checks follow the endpoint table") {
  Harness h;
  std::string teacher = mint("tess", {"teacher"});
  REQUIRE(h.make_course(teacher, "logic", {"sam"}).status == 201);
  std::map<Role, std::string> tokens = {
      {Role::student, mint("sam", {"student"})},
      {Role::teacher, teacher},
      {Role::admin, mint("ada", {"admin"})},
  };
  int serial = 0;
  for (const Endpoint& e : endpoints()) {
    for (const auto& [role, token] : tokens) {
      HttpRequest r = test::sample_request(e, serial++);
      r.authorization = "Bearer " + token;
      int status = h.service->handle(r).status;
      INFO(e.method, " ", e.path, " as ", to_string(role), " -> ", status);
      if (static_cast<int>(role) < static_cast<int>(e.minimum)) {
        CHECK(status == 403);
      } else {
        CHECK(status != 403);
        CHECK(status != 401);
        CHECK(status < 500);
      }
    }
  }
  h.service->wait_idle();
}

TEST_CASE("service: course management") {
  Harness h;
  std::string tess = mint("tess", {"teacher"});
  std::string tom = mint("tom", {"teacher"});
  std::string sam = mint("sam", {"student"});

  auto created = h.make_course(tess, "logic", {"sam", "sue"}, "natural-deduction");
  CHECK(created.status == 201);
  CHECK(h.json_of(created)["roster_size"] == 2);
  CHECK(h.make_course(tess, "logic", {}).status == 409);
  CHECK(h.make_course(tess, "x", {}, "no-such-profile").status == 400);
  CHECK(h.make_course(tess, "y", {}, "", {"no-such-tutorial"}).status == 404);

  // students see enrolled courses without the roster
  json seen = h.json_of(h.call("GET", "/v1/courses", sam))["courses"];
  REQUIRE(seen.size() == 1);
  CHECK(seen[0]["id"] == "logic");
  CHECK_FALSE(seen[0].contains("roster"));
  CHECK(h.json_of(h.call("GET", "/v1/courses", mint("eve", {"student"})))["courses"].empty());
  json staff = h.json_of(h.call("GET", "/v1/courses", tess))["courses"];
  CHECK(staff[0]["roster"].size() == 2);

  CHECK(h.call("POST", "/v1/courses", tom, json{{"id", "logic"}, {"action", "update"}, {"title", "Mine"}}).status ==
        403);
  CHECK(h.call("POST", "/v1/courses", tess, json{{"id", "logic"}, {"action", "set-profile"}, {"profile", "permissive"}})
            .status == 200);
  CHECK(h.call("POST", "/v1/courses", tess, json{{"id", "logic"}, {"action", "fly"}}).status == 400);

  // a roster of 26 needs four prover instances
  std::vector<std::string> names;
  for (int i = 0; i < 24; ++i) names.push_back("s" + std::to_string(i));
  auto enrolled = h.call("POST", "/v1/courses", tess, json{{"id", "logic"}, {"action", "enroll"}, {"usernames", names}});
  CHECK(h.json_of(enrolled)["roster_size"] == 26);
  CHECK(h.pool->target() == 4);
  CHECK(h.pool->status().count(prover::InstanceState::healthy) == 4);

  auto upload = h.call("POST", "/v1/courses", tess,
                       json{{"id", "logic"}, {"action", "upload-tutorial"},
                            {"source", test::read_source("tutorials/first_order.toml")}});
  CHECK(upload.status == 201);
  json after = h.json_of(h.call("GET", "/v1/courses", sam))["courses"][0]["tutorials"];
  CHECK(std::find(after.begin(), after.end(), "first-order") != after.end());
}

TEST_CASE("service: tutorial upload is validated") {
  Harness h;
  std::string tess = mint("tess", {"teacher"});
  std::string source = test::read_source("tutorials/lists.toml");
  std::string bad = source;
  auto at = bad.find("  sorry");
  REQUIRE(at != std::string::npos);
  bad.replace(at, 7, "  by auto");
  auto r = h.call("POST", "/v1/tutorials", tess, json{{"source", bad}});
  // the permissive profile allows auto
  CHECK(r.status == 201);

  std::string nd = bad;
  nd.replace(nd.find("profile = \"permissive\""), 22, "profile = \"natural-deduction\"");
  r = h.call("POST", "/v1/tutorials", tess, json{{"source", nd}});
  CHECK(r.status == 422);
  json body = h.json_of(r);
  CHECK(body["error"]["code"] == "validation-failed");
  REQUIRE_FALSE(body["diagnostics"].empty());
  CHECK(body["diagnostics"][0]["layer"] == "restriction");

  CHECK(h.call("POST", "/v1/tutorials", tess, json{{"source", "id = "}}).status == 400);
  CHECK(error_code([&] { h.service->seed_tutorial(nd); }) == Errc::invariant_violation);
}

TEST_CASE("service: students see tutorials without hidden blocks") {
  Harness h;
  std::string tess = mint("tess", {"teacher"});
  h.make_course(tess, "logic", {"sam"});
  std::string sam = mint("sam", {"student"});
  json t = h.json_of(h.call("GET", "/v1/tutorials/conjunction?locale=de", sam));
  CHECK(t["title"] == "Konjunktion");
  int tasks = 0;
  for (const auto& s : t["sections"]) {
    for (const auto& b : s["blocks"]) {
      CHECK(b["kind"] != "hidden");
      if (b["kind"] == "task") {
        ++tasks;
        CHECK(b["outcome"] == "unchecked");
        CHECK(b["content"] == b["initial"]);
      }
    }
  }
  CHECK(tasks == 5);
  CHECK_FALSE(t.contains("header"));
  json staff = h.json_of(h.call("GET", "/v1/tutorials/conjunction", tess));
  CHECK(staff["header"] == "theory Conjunction imports Main begin");
  CHECK(h.call("GET", "/v1/tutorials/lists", sam).status == 403);
  CHECK(h.call("GET", "/v1/tutorials/nope", sam).status == 404);
}

TEST_CASE("service: checking the bundled solutions end to end") {
  Harness h;
  std::string tess = mint("tess", {"teacher"});
  h.make_course(tess, "logic", {"sam"});
  std::string sam = mint("sam", {"student"});

  json ok = h.check(sam, {{"tutorial_id", "conjunction"}, {"blocks", test::solution_blocks("conjunction.correct.json")}});
  CHECK(ok["status"] == "finished-ok");
  CHECK(ok["course_id"] == "logic");
  for (const auto& [block, outcome] : ok["outcomes"].items()) CHECK(outcome == "ok");
  CHECK(ok["feedback"].empty());
  REQUIRE(ok["states"].size() == 3);
  CHECK(ok["states"][0]["block_id"] == "t4");
  CHECK(ok["states"][1]["block_id"] == "t5");

  json bad = h.check(sam, {{"tutorial_id", "conjunction"}, {"blocks", test::solution_blocks("conjunction.broken.json")}});
  CHECK(bad["status"] == "finished-failed");
  CHECK(bad["outcomes"]["t1"] == "failed");
  CHECK(bad["outcomes"]["t2"] == "ok");
  REQUIRE(bad["feedback"].size() == 1);
  json item = bad["feedback"][0];
  CHECK(item["block_id"] == "t1");
  CHECK(item["label"] == "prover output");
  CHECK(item["text"] == "Failed to apply initial proof method:\ngoal (1 subgoal):\n 1. A ⟹ A ∧ A");
  CHECK_FALSE(item["hints"].empty());
  std::string t1 = test::solution_blocks("conjunction.broken.json")["t1"];
  std::size_t start = item["span"]["start"];
  CHECK(t1.substr(start, 2) == "by");

  // one session per user and course, reused
  CHECK(h.service->open_sessions() == 1);
  CHECK(h.pool->total_active_sessions() == 1);

  // both checks recorded one diff per submitted block
  std::string exported = h.call("GET", "/v1/export?course=logic", tess).body;
  CHECK(std::count(exported.begin(), exported.end(), '\n') == 6);
  CHECK(exported.find("sam") == std::string::npos);

  json progress = h.json_of(h.call("POST", "/v1/progress/conjunction/reset", sam));
  for (const auto& [block, outcome] : progress["outcomes"].items()) CHECK(outcome == "unchecked");
  CHECK(progress["contents"]["t1"] == "lemma conj_self: \"A ⟹ A ∧ A\"\n  sorry");
}

TEST_CASE("service: blocked restriction errors skip the prover") {
  Harness h;
  std::string tess = mint("tess", {"teacher"});
  h.make_course(tess, "logic", {"sam"}, "natural-deduction");
  std::string sam = mint("sam", {"student"});
  json r = h.check(sam, {{"tutorial_id", "conjunction"},
                         {"blocks", {{"t1", "lemma conj_self: \"A ⟹ A ∧ A\"\n  by auto"}}}});
  CHECK(r["status"] == "restricted");
  CHECK(r["outcomes"]["t1"] == "failed");
  REQUIRE(r["diagnostics"].size() == 1);
  CHECK(r["diagnostics"][0]["code"] == "forbidden-method");
  CHECK(r["feedback"][0]["hints"].size() == 2);
  CHECK(h.service->open_sessions() == 0);
  CHECK(h.pool->total_active_sessions() == 0);
  CHECK(h.call("GET", "/v1/export", tess).body.empty());

  // warnings alone do not block
  json warn = h.check(sam, {{"tutorial_id", "conjunction"},
                            {"blocks", {{"t3", "lemma conj_left: \"A ∧ B ⟹ A\"\n  by (erule andEL)"}}}});
  CHECK(warn["status"] != "restricted");
}

TEST_CASE("service: gating leaves tasks after a failure unchecked") {
  Harness h(test::harness_pool_config(), std::chrono::minutes(10),
            [](ServiceConfig& c) { c.gate_after_failed_task = true; });
  std::string tess = mint("tess", {"teacher"});
  h.make_course(tess, "logic", {"sam"});
  std::string sam = mint("sam", {"student"});
  json bad = h.check(sam, {{"tutorial_id", "conjunction"}, {"blocks", test::solution_blocks("conjunction.broken.json")}});
  CHECK(bad["status"] == "finished-failed");
  CHECK(bad["outcomes"]["t1"] == "failed");
  for (const char* later : {"t2", "t3", "t4", "t5"}) CHECK(bad["outcomes"][later] == "unchecked");
  CHECK(bad["feedback"].size() == 1);

  json ok = h.check(sam, {{"tutorial_id", "conjunction"}, {"blocks", test::solution_blocks("conjunction.correct.json")}});
  for (const auto& [block, outcome] : ok["outcomes"].items()) CHECK(outcome == "ok");
}

TEST_CASE("service: check request errors") {
  Harness h;
  std::string tess = mint("tess", {"teacher"});
  h.make_course(tess, "logic", {"sam"});
  std::string sam = mint("sam", {"student"});
  CHECK(h.call("POST", "/v1/checks", sam, json{{"tutorial_id", "conjunction"}}).status == 400);
  CHECK(h.call("POST", "/v1/checks", sam, json{{"tutorial_id", "conjunction"}, {"blocks", {{"intro", "x"}}}}).status ==
        400);
  CHECK(h.call("POST", "/v1/checks", sam, json{{"tutorial_id", "nope"}, {"blocks", json::object()}}).status == 404);
  CHECK(h.call("POST", "/v1/checks", sam, json{{"tutorial_id", "lists"}, {"blocks", json::object()}}).status == 403);
  json body = {{"tutorial_id", "conjunction"}, {"blocks", json::object()}, {"request_id", "mine"}};
  CHECK(h.call("POST", "/v1/checks", sam, body).status == 202);
  CHECK(h.call("POST", "/v1/checks", sam, body).status == 409);
  h.service->wait_idle();

  // another student cannot see the check
  std::string sue = mint("sue", {"student"});
  CHECK(h.call("GET", "/v1/checks/mine", sue).status == 404);
  CHECK(h.call("GET", "/v1/checks/mine", sam).status == 200);
}

TEST_CASE("service: exhausted pool reports an error result") {
  prover::PoolConfig c = test::harness_pool_config();
  c.initial = 1;
  c.max = 1;
  c.session_cap = 1;
  Harness h(c);
  std::string tess = mint("tess", {"teacher"});
  h.make_course(tess, "logic", {"sam", "sue"});
  json blocks = test::solution_blocks("conjunction.correct.json");
  json first = h.check(mint("sam", {"student"}), {{"tutorial_id", "conjunction"}, {"blocks", blocks}});
  CHECK(first["status"] == "finished-ok");
  json second = h.check(mint("sue", {"student"}), {{"tutorial_id", "conjunction"}, {"blocks", blocks}});
  CHECK(second["status"] == "error");
  CHECK(second["error"]["code"] == "pool-exhausted");

  // nothing has been idle long enough to expire
  CHECK(h.service->expire_idle_sessions() == 0);
}

TEST_CASE("service: idle sessions are released") {
  Harness h(test::harness_pool_config(), std::chrono::milliseconds(0));
  std::string tess = mint("tess", {"teacher"});
  h.make_course(tess, "logic", {"sam"});
  h.check(mint("sam", {"student"}), {{"tutorial_id", "conjunction"}, {"blocks", json::object()}});
  CHECK(h.service->open_sessions() == 1);
  CHECK(h.service->expire_idle_sessions() == 1);
  CHECK(h.pool->total_active_sessions() == 0);
}

TEST_CASE("service: errors in hidden content become tutorial-level notices") {
  Harness h;
  std::string tess = mint("tess", {"teacher"});
  std::string source = test::read_source("tutorials/conjunction.toml");
  auto at = source.find("definition both");
  REQUIRE(at != std::string::npos);
  source.insert(at, "qed\n");
  REQUIRE(h.call("POST", "/v1/tutorials", tess, json{{"source", source}}).status == 201);
  h.make_course(tess, "logic", {"sam"});
  std::string sam = mint("sam", {"student"});
  Principal p = h.service->authenticate(sam);

  std::mutex m;
  std::vector<json> frames;
  auto sub = h.service->subscribe(p, [&](const std::string& text) {
    std::lock_guard lock(m);
    frames.push_back(json::parse(text));
  });
  json reply = json::parse(h.service->handle_stream_message(
      p, json{{"type", "check"}, {"tutorial_id", "conjunction"}, {"blocks", json::object()}}.dump()));
  CHECK(reply["type"] == "notice");
  CHECK(reply["payload"]["state"] == "pending");
  h.service->wait_idle();
  h.service->unsubscribe(sub);

  std::lock_guard lock(m);
  REQUIRE(frames.size() == 2);
  CHECK(frames[0]["type"] == "check-result");
  CHECK(frames[0]["request_id"] == reply["request_id"]);
  json hidden_item;
  for (const auto& item : frames[0]["payload"]["feedback"]) {
    if (item["tutorial_level"] == true) hidden_item = item;
  }
  REQUIRE(hidden_item.is_object());
  CHECK(hidden_item["block_id"].is_null());
  CHECK(hidden_item["span"].is_null());
  CHECK(hidden_item["text"] == "'qed' without a matching 'proof'");
  CHECK(frames[1]["type"] == "notice");
  CHECK(frames[1]["payload"]["text"] == feedback::hidden_origin_notice("en"));
}

TEST_CASE("service: stream frames and per-user ordering") {
  Harness h;
  std::string tess = mint("tess", {"teacher"});
  h.make_course(tess, "logic", {"sam", "sue"});
  Principal sam = h.service->authenticate(mint("sam", {"student"}));
  Principal sue = h.service->authenticate(mint("sue", {"student"}));

  json bad = json::parse(h.service->handle_stream_message(sam, "{]"));
  CHECK(bad["type"] == "error");
  bad = json::parse(h.service->handle_stream_message(sam, R"({"type":"chat"})"));
  CHECK(bad["type"] == "error");

  std::mutex m;
  std::vector<std::string> sam_order, sue_seen;
  h.service->subscribe(sam, [&](const std::string& text) {
    std::lock_guard lock(m);
    sam_order.push_back(json::parse(text)["request_id"]);
  });
  h.service->subscribe(sue, [&](const std::string& text) {
    std::lock_guard lock(m);
    sue_seen.push_back(text);
  });
  std::vector<std::string> sent;
  for (int i = 0; i < 8; ++i) {
    std::string id = "q" + std::to_string(i);
    json frame = {{"type", "check"}, {"tutorial_id", "conjunction"}, {"request_id", id},
                  {"blocks", {{"t1", "lemma conj_self: \"A ⟹ A ∧ A\"\n  by (rule andI) (* " + id + " *)"}}}};
    h.service->handle_stream_message(sam, frame.dump());
    sent.push_back(id);
  }
  h.service->wait_idle();
  std::lock_guard lock(m);
  CHECK(sam_order == sent);
  CHECK(sue_seen.empty());

  // every check recorded exactly one diff in order
  auto stream = h.store->stream({sam.user_id, "conjunction", "t1"});
  CHECK(stream.size() == 8);
}

TEST_CASE("service: editor support endpoints") {
  Harness h;
  std::string tess = mint("tess", {"teacher"});
  h.make_course(tess, "logic", {"sam"}, "natural-deduction");
  std::string sam = mint("sam", {"student"});

  json rules = h.json_of(h.call("GET", "/v1/rules?course=logic&category=conjunction&locale=de", sam))["rules"];
  REQUIRE(rules.size() == 4);
  CHECK(rules[0]["display"] == "andE");
  CHECK(rules[3]["prover"] == "conjI");
  json all = h.json_of(h.call("GET", "/v1/rules?course=logic", sam))["rules"];
  CHECK(all.size() == 23);
  CHECK(h.json_of(h.call("GET", "/v1/rules?q=conj", sam))["rules"].size() == 4);

  json sym = h.json_of(h.call("GET", "/v1/symbols?q=and", sam))["symbols"];
  CHECK_FALSE(sym.empty());
  json toks = h.json_of(h.call("POST", "/v1/tokenize", sam, json{{"text", "lemma \"A\""}}))["tokens"];
  REQUIRE(toks.size() == 3);
  CHECK(toks[2]["kind"] == "quoted-string");
  json comp = h.json_of(h.call("POST", "/v1/complete", sam,
                               json{{"text", "by (rule and"}, {"cursor", 12}, {"course_id", "logic"}}))["completions"];
  // the course pattern permits only andE and andI among the conjunction rules
  REQUIRE(comp.size() == 2);
  CHECK(comp[0]["insert"] == "andE");
  CHECK(comp[1]["insert"] == "andI");
  CHECK(comp[0]["start"] == 9);
  CHECK(h.call("POST", "/v1/complete", sam, json{{"text", "ab"}, {"cursor", 9}}).status == 400);
}

TEST_CASE("service: administration") {
  Harness h;
  std::string ada = mint("ada", {"admin"});
  std::string tess = mint("tess", {"teacher"});
  h.make_course(tess, "logic", {"sam"});
  std::string sam = mint("sam", {"student"});
  std::string sam_id = h.service->authenticate(sam).user_id;
  h.check(sam, {{"tutorial_id", "conjunction"}, {"blocks", test::solution_blocks("conjunction.correct.json")}});

  json pool = h.json_of(h.call("GET", "/v1/admin/pool", ada));
  CHECK(pool["target"] == 2);
  CHECK(pool["healthy"] == 2);
  CHECK(pool["degraded"] == false);
  CHECK(pool["instances"].size() == 2);
  json scaled = h.json_of(h.call("POST", "/v1/admin/pool/scale", ada, json{{"target", 3}}));
  CHECK(scaled["target"] == 3);
  CHECK(h.call("POST", "/v1/admin/pool/scale", ada, json{{"target", 99}}).status == 400);
  CHECK(h.call("POST", "/v1/admin/pool/scale", ada, json{{"target", "3"}}).status == 400);

  std::string before = h.call("GET", "/v1/export", ada).body;
  CHECK(h.call("DELETE", "/v1/admin/users/" + sam_id, ada).status == 204);
  CHECK_FALSE(h.store->profile(sam_id).has_value());
  CHECK(h.service->open_sessions() == 0);
  CHECK(h.call("GET", "/v1/export", ada).body == before);
  CHECK(h.call("DELETE", "/v1/admin/users/" + sam_id, ada).status == 404);
  CHECK(h.call("GET", "/v1/export?from=abc", ada).status == 400);
  auto exported = h.call("GET", "/v1/export?from=0&to=1", ada);
  CHECK(exported.content_type == "application/x-ndjson");
  CHECK(exported.body.empty());
}

TEST_CASE("config_from_env reads PB_ variables") {
  test::TempDir dir;
  auto key = dir.path() / "issuer.pem";
  {
    std::ofstream out(key);
    out << test::test_keys().public_pem;
  }
  std::map<std::string, std::string> env = {
      {"PB_LISTEN_ADDR", "0.0.0.0:9090"},  {"PB_ISSUER_URL", kIssuer},
      {"PB_ISSUER_KEY_FILE", key.string()}, {"PB_ROLES_CLAIM", "realm_access.roles"},
      {"PB_POOL_INITIAL", "3"},            {"PB_POOL_MAX", "12"},
      {"PB_SESSION_CAP", "8"},             {"PB_PROVER_MODE", "fixture"},
      {"PB_PROVER_FIXTURES", "f.json"},    {"PB_LOCALE_DEFAULT", "de"},
      {"PB_SESSION_IDLE_MS", "1000"},
      {"PB_GATE_FAILED_TASKS", "1"},
  };
  auto lookup = [&](const std::string& name) -> std::optional<std::string> {
    auto it = env.find(name);
    if (it == env.end()) return std::nullopt;
    return it->second;
  };
  AppConfig c = config_from_env(lookup);
  CHECK(c.listen_host == "0.0.0.0");
  CHECK(c.listen_port == 9090);
  REQUIRE(c.auth.issuers.size() == 1);
  CHECK(c.auth.issuers[0].public_key_pem == test::test_keys().public_pem);
  CHECK(c.auth.roles_claim == "realm_access.roles");
  CHECK(c.pool.initial == 3);
  CHECK(c.pool.max == 12);
  CHECK(c.pool.session_cap == 8);
  CHECK(c.prover_mode == ProverMode::fixture);
  CHECK(c.fixtures_path == "f.json");
  CHECK(c.locale_default == "de");
  CHECK(c.session_idle_timeout == std::chrono::milliseconds(1000));
  CHECK(c.gate_after_failed_task);

  AppConfig d = config_from_env([](const std::string&) { return std::nullopt; });
  CHECK(d.listen_port == 8080);
  CHECK(d.prover_mode == ProverMode::structural);
  CHECK(d.data_dir.empty());

  for (auto [name, value] : std::vector<std::pair<std::string, std::string>>{
           {"PB_PROVER_MODE", "magic"}, {"PB_POOL_MAX", "x"}, {"PB_LISTEN_ADDR", "nohost"},
           {"PB_LOCALE_DEFAULT", "fr"}, {"PB_GATE_FAILED_TASKS", "yes"}}) {
    auto bad = env;
    bad[name] = value;
    auto bad_lookup = [&](const std::string& n) -> std::optional<std::string> {
      auto it = bad.find(n);
      if (it == bad.end()) return std::nullopt;
      return it->second;
    };
    INFO(name);
    CHECK(error_code([&] { config_from_env(bad_lookup); }) == Errc::invalid_argument);
  }
  env.erase("PB_PROVER_FIXTURES");
  CHECK(error_code([&] { config_from_env(lookup); }) == Errc::invalid_argument);
  env["PB_PROVER_FIXTURES"] = "f.json";
  env["PB_ISSUER_KEY_FILE"] = (dir.path() / "missing.pem").string();
  CHECK(error_code([&] { config_from_env(lookup); }) == Errc::io_error);
}
