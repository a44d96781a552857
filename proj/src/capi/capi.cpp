#include "proofbuddy.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "api/app.hpp"
#include "api/jwt.hpp"
#include "common/error.hpp"
#include "feedback/rules.hpp"
#include "json.hpp"
#include "prover/mock.hpp"
#include "prover/pool.hpp"
#include "store/diff.hpp"
#include "store/store.hpp"
#include "syntax/completion.hpp"
#include "syntax/lexer.hpp"
#include "syntax/outline.hpp"
#include "syntax/profile.hpp"
#include "syntax/restrictions.hpp"
#include "syntax/symbols.hpp"
#include "tutorial/tutorial.hpp"

struct pb_tutorial {
  pb::tutorial::Tutorial value;
};

struct pb_mock_prover {
  std::unique_ptr<pb::prover::MockProverServer> server;
};

struct pb_pool {
  std::shared_ptr<pb::prover::Pool> pool;
};

struct pb_store {
  std::shared_ptr<pb::store::Store> store;
};

struct pb_server {
  std::unique_ptr<pb::api::Application> app;
};

namespace {

using nlohmann::json;
using pb::Errc;
using pb::Error;

thread_local std::string last_error;

char* copy_out(std::string_view text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, text.data(), text.size());
  out[text.size()] = '\0';
  return out;
}

// Runs `body`, translating exceptions into a status and thread-local message.
template <typename F>
pb_status guarded(F&& body) {
  last_error.clear();
  try {
    body();
    return PB_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return static_cast<pb_status>(e.code());
  } catch (const json::exception& e) {
    last_error = e.what();
    return PB_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return PB_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return PB_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw Error(Errc::invalid_argument, std::string(what) + " is NULL");
}

std::string_view view(const char* text, size_t len) {
  if (text == nullptr && len > 0) throw Error(Errc::invalid_argument, "text is NULL");
  return text == nullptr ? std::string_view{} : std::string_view(text, len);
}

std::string or_default(const char* text, const char* fallback) {
  return text != nullptr && *text != '\0' ? std::string(text) : std::string(fallback);
}

const pb::syntax::SyntaxProfile& profile_named(const char* id) {
  static const pb::syntax::SyntaxProfile permissive = pb::syntax::permissive_profile();
  if (id == nullptr || *id == '\0') return permissive;
  const pb::syntax::SyntaxProfile* found = pb::syntax::find_bundled_profile(id);
  if (found == nullptr) throw Error(Errc::not_found, std::string("unknown profile '") + id + "'");
  return *found;
}

json diagnostics_json(const std::vector<pb::syntax::Diagnostic>& diagnostics) {
  json out = json::array();
  for (const auto& d : diagnostics) {
    out.push_back({{"severity", pb::syntax::to_string(d.severity)},
                   {"layer", pb::syntax::to_string(d.layer)},
                   {"code", d.code},
                   {"message", d.message},
                   {"block_id", d.block_id},
                   {"start", d.span.start},
                   {"end", d.span.end}});
  }
  return out;
}

json result_json(const pb::prover::ProverResult& r) {
  json messages = json::array();
  for (const auto& m : r.messages) {
    messages.push_back({{"severity", pb::prover::to_string(m.severity)},
                        {"start", m.span.start},
                        {"end", m.span.end},
                        {"text", m.text}});
  }
  json states = json::array();
  for (const auto& s : r.states) {
    states.push_back({{"pos", s.position}, {"text", s.text}, {"subgoals", s.open_subgoals}});
  }
  return {{"status", pb::prover::to_string(r.status)},
          {"messages", messages},
          {"states", states}};
}

pb::prover::MockOptions mock_options(const char* mode, const char* fixtures_path) {
  pb::prover::MockOptions options;
  std::string m = or_default(mode, "structural");
  if (m == "fixture") {
    require(fixtures_path, "fixtures_path");
    options.mode = pb::prover::MockMode::fixture;
    options.fixtures = std::make_shared<const pb::prover::FixtureSet>(
        pb::prover::FixtureSet::load_file(fixtures_path));
  } else if (m != "structural") {
    throw Error(Errc::invalid_argument, "mode must be structural or fixture, got '" + m + "'");
  }
  return options;
}

pb::tutorial::TutorialState state_for(const pb::tutorial::Tutorial& t, const char* state_json) {
  if (state_json == nullptr) return pb::tutorial::fresh_state(t, "");
  pb::tutorial::TutorialState s = pb::store::state_from_json(state_json);
  pb::tutorial::check_state(t, s);
  return s;
}

std::string preamble(int with_preamble) {
  return with_preamble != 0 ? pb::feedback::bundled_rules().alias_declarations() : std::string();
}

}  // namespace

extern "C" {

const char* pb_version(void) { return "1.0.0"; }

const char* pb_status_name(pb_status status) {
  if (status < PB_OK || status > PB_INTERNAL) return "unknown";
  return pb::errc_name(static_cast<Errc>(status)).data();
}

const char* pb_last_error(void) { return last_error.c_str(); }

void pb_string_free(char* text) { std::free(text); }

pb_status pb_tokenize(const char* text, size_t len, char** out_json) {
  return guarded([&] {
    require(out_json, "out_json");
    json out = json::array();
    for (const auto& tok : pb::syntax::tokenize(view(text, len))) {
      out.push_back({{"kind", pb::syntax::to_string(tok.kind)},
                     {"start", tok.span.start},
                     {"end", tok.span.end},
                     {"text", tok.text}});
    }
    *out_json = copy_out(out.dump());
  });
}

pb_status pb_outline(const char* text, size_t len, const char* locale, char** out_json) {
  return guarded([&] {
    require(out_json, "out_json");
    auto result = pb::syntax::outline(pb::syntax::tokenize(view(text, len)),
                                      or_default(locale, "en"));
    json commands = json::array();
    for (const auto& c : result.commands) {
      commands.push_back({{"name", c.name}, {"start", c.span.start}, {"end", c.span.end}});
    }
    *out_json = copy_out(
        json{{"commands", commands}, {"diagnostics", diagnostics_json(result.diagnostics)}}.dump());
  });
}

pb_status pb_check_restrictions(const char* text, size_t len, const char* profile_id,
                                const char* locale, char** out_json) {
  return guarded([&] {
    require(out_json, "out_json");
    std::string loc = or_default(locale, "en");
    const auto& profile = profile_named(profile_id);
    auto outlined = pb::syntax::outline(pb::syntax::tokenize(view(text, len)), loc);
    std::vector<pb::syntax::Diagnostic> all = outlined.diagnostics;
    for (auto& d : pb::syntax::check_restrictions(outlined.commands, profile, loc)) {
      all.push_back(std::move(d));
    }
    bool blocked = false;
    for (const auto& d : all) {
      blocked |= profile.blocking && d.layer == pb::syntax::Layer::restriction &&
                 d.severity == pb::syntax::Severity::error;
    }
    *out_json = copy_out(json{{"profile", profile.id},
                              {"blocked", blocked},
                              {"diagnostics", diagnostics_json(all)}}
                             .dump());
  });
}

pb_status pb_profiles(char** out_json) {
  return guarded([&] {
    require(out_json, "out_json");
    json out = json::array();
    for (const auto& p : pb::syntax::bundled_profiles()) {
      out.push_back({{"id", p.id}, {"blocking", p.blocking}});
    }
    *out_json = copy_out(out.dump());
  });
}

pb_status pb_symbols_lookup(const char* query, char** out_json) {
  return guarded([&] {
    require(out_json, "out_json");
    json out = json::array();
    for (const auto& s : pb::syntax::lookup_symbol(query == nullptr ? "" : query)) {
      json entry = {{"name", s.name}, {"glyph", s.glyph}, {"escape", s.escape}};
      if (s.abbreviation) entry["abbreviation"] = *s.abbreviation;
      out.push_back(std::move(entry));
    }
    *out_json = copy_out(out.dump());
  });
}

pb_status pb_complete(const char* text, size_t len, size_t cursor, const char* profile_id,
                      char** out_json) {
  return guarded([&] {
    require(out_json, "out_json");
    std::string_view doc = view(text, len);
    if (cursor > doc.size()) throw Error(Errc::out_of_range, "cursor past the end of the text");
    const auto& profile = profile_named(profile_id);
    json out = json::array();
    for (const auto& c : pb::syntax::complete(
             doc, cursor, profile, pb::feedback::list_rules(pb::feedback::bundled_rules(), profile))) {
      out.push_back({{"start", c.replace.start},
                     {"end", c.replace.end},
                     {"insert", c.insert},
                     {"kind", pb::syntax::to_string(c.kind)},
                     {"label", c.label}});
    }
    *out_json = copy_out(out.dump());
  });
}

pb_status pb_rules(const char* profile_id, const char* category, const char* locale,
                   char** out_json) {
  return guarded([&] {
    require(out_json, "out_json");
    std::string loc = or_default(locale, "en");
    json out = json::array();
    for (const auto& e : pb::feedback::list_rules(pb::feedback::bundled_rules(),
                                                  profile_named(profile_id),
                                                  category == nullptr ? "" : category)) {
      out.push_back({{"display", e.display_name},
                     {"prover", e.prover_name},
                     {"schema", e.schema},
                     {"category", e.category},
                     {"description", e.describe(loc)}});
    }
    *out_json = copy_out(out.dump());
  });
}

pb_status pb_tutorial_load(const char* source, size_t len, pb_tutorial** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto t = std::make_unique<pb_tutorial>();
    t->value = pb::tutorial::load_tutorial(view(source, len));
    *out = t.release();
  });
}

void pb_tutorial_free(pb_tutorial* tutorial) { delete tutorial; }

pb_status pb_tutorial_info(const pb_tutorial* tutorial, char** out_json) {
  return guarded([&] {
    require(tutorial, "tutorial");
    require(out_json, "out_json");
    const auto& t = tutorial->value;
    json sections = json::array();
    for (const auto& s : t.sections) {
      json blocks = json::array();
      for (const auto& b : s.blocks) {
        blocks.push_back({{"id", b.id}, {"kind", pb::tutorial::to_string(b.kind)}});
      }
      sections.push_back({{"title", s.title}, {"blocks", blocks}});
    }
    *out_json = copy_out(json{{"id", t.id},
                              {"title", t.title},
                              {"profile", t.profile},
                              {"theory", t.theory_name},
                              {"sections", sections}}
                             .dump());
  });
}

pb_status pb_tutorial_validate(const pb_tutorial* tutorial, const char* profile_id,
                               const char* locale, char** out_json) {
  return guarded([&] {
    require(tutorial, "tutorial");
    require(out_json, "out_json");
    const auto& t = tutorial->value;
    const char* id = profile_id != nullptr ? profile_id : t.profile.c_str();
    *out_json = copy_out(
        diagnostics_json(pb::tutorial::validate_tutorial(t, profile_named(id),
                                                         or_default(locale, "en")))
            .dump());
  });
}

pb_status pb_tutorial_assemble(const pb_tutorial* tutorial, const char* state_json,
                               int with_preamble, char** out_text) {
  return guarded([&] {
    require(tutorial, "tutorial");
    require(out_text, "out_text");
    const auto& t = tutorial->value;
    auto assembled =
        pb::tutorial::assemble_theory(t, state_for(t, state_json), preamble(with_preamble));
    *out_text = copy_out(assembled.text);
  });
}

pb_status pb_tutorial_map_span(const pb_tutorial* tutorial, const char* state_json,
                               int with_preamble, size_t start, size_t end, char** out_json) {
  return guarded([&] {
    require(tutorial, "tutorial");
    require(out_json, "out_json");
    const auto& t = tutorial->value;
    auto assembled =
        pb::tutorial::assemble_theory(t, state_for(t, state_json), preamble(with_preamble));
    auto mapped = pb::tutorial::map_span(assembled, {start, end});
    *out_json = copy_out(json{{"hidden", mapped.hidden},
                              {"block_id", mapped.block_id},
                              {"start", mapped.local.start},
                              {"end", mapped.local.end},
                              {"multi_segment", mapped.multi_segment}}
                             .dump());
  });
}

pb_status pb_theory_hash(const char* text, size_t len, char** out) {
  return guarded([&] {
    require(out, "out");
    *out = copy_out(pb::prover::theory_hash(view(text, len)));
  });
}

pb_status pb_mock_check(const char* mode, const char* fixtures_path, const char* theory,
                        size_t len, char** out_json) {
  return guarded([&] {
    require(out_json, "out_json");
    auto result = pb::prover::mock_result(mock_options(mode, fixtures_path), view(theory, len));
    *out_json = copy_out(result_json(result).dump());
  });
}

pb_status pb_mock_prover_start(const char* mode, const char* fixtures_path, const char* host,
                               uint16_t port, int64_t fail_after, pb_mock_prover** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto options = mock_options(mode, fixtures_path);
    options.host = or_default(host, "127.0.0.1");
    options.port = port;
    if (fail_after >= 0) options.fail_after = static_cast<std::uint64_t>(fail_after);
    auto handle = std::make_unique<pb_mock_prover>();
    handle->server = std::make_unique<pb::prover::MockProverServer>(options);
    handle->server->start();
    *out = handle.release();
  });
}

uint16_t pb_mock_prover_port(const pb_mock_prover* prover) {
  return prover == nullptr ? 0 : prover->server->port();
}

void pb_mock_prover_free(pb_mock_prover* prover) {
  if (prover == nullptr) return;
  prover->server->stop();
  delete prover;
}

pb_status pb_pool_create(const char* config_json, pb_pool** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    json c = config_json == nullptr ? json::object() : json::parse(config_json);
    pb::prover::PoolConfig config;
    config.initial = c.value("initial", config.initial);
    config.max = c.value("max", config.max);
    config.session_cap = c.value("session_cap", config.session_cap);
    config.check_timeout =
        std::chrono::milliseconds(c.value("check_timeout_ms", config.check_timeout.count()));
    std::string mode = c.value("mode", "structural");
    std::shared_ptr<pb::prover::Launcher> launcher;
    if (mode == "external") {
      launcher = std::make_shared<pb::prover::ExternalLauncher>(
          pb::prover::ExternalLauncher::parse_endpoints(c.value("endpoints", "")));
    } else {
      std::string fixtures = c.value("fixtures", "");
      launcher = std::make_shared<pb::prover::InProcessLauncher>(
          mock_options(mode.c_str(), fixtures.empty() ? nullptr : fixtures.c_str()));
    }
    config.validate();
    auto handle = std::make_unique<pb_pool>();
    handle->pool = std::make_shared<pb::prover::Pool>(config, launcher);
    *out = handle.release();
  });
}

void pb_pool_free(pb_pool* pool) { delete pool; }

pb_status pb_pool_check(pb_pool* pool, const char* theory, size_t len, char** out_json) {
  return guarded([&] {
    require(pool, "pool");
    require(out_json, "out_json");
    auto handle = pool->pool->acquire_session();
    pb::prover::ProverResult result;
    try {
      result = pool->pool->check_theory(handle, std::string(view(theory, len)));
    } catch (...) {
      pool->pool->release_session(handle);
      throw;
    }
    if (pool->pool->is_live(handle)) pool->pool->release_session(handle);
    *out_json = copy_out(result_json(result).dump());
  });
}

pb_status pb_pool_scale(pb_pool* pool, int target) {
  return guarded([&] {
    require(pool, "pool");
    pool->pool->scale(target);
  });
}

pb_status pb_pool_status(const pb_pool* pool, char** out_json) {
  return guarded([&] {
    require(pool, "pool");
    require(out_json, "out_json");
    auto status = pool->pool->status();
    json instances = json::array();
    for (const auto& s : status.instances) {
      instances.push_back({{"id", s.id},
                           {"state", pb::prover::to_string(s.state)},
                           {"active_sessions", s.active_sessions},
                           {"acquisitions", s.acquisitions},
                           {"port", s.endpoint.port}});
    }
    *out_json = copy_out(json{{"target", pool->pool->target()},
                              {"degraded", status.degraded},
                              {"instances", instances}}
                             .dump());
  });
}

int pb_instances_for_roster(size_t roster, int students_per_pair) {
  try {
    return pb::prover::instances_for_roster(roster, students_per_pair);
  } catch (const std::exception& e) {
    last_error = e.what();
    return -1;
  }
}

pb_status pb_diff(const char* before, size_t before_len, const char* after, size_t after_len,
                  char** out_ops_json) {
  return guarded([&] {
    require(out_ops_json, "out_ops_json");
    auto script = pb::store::edit_script(view(before, before_len), view(after, after_len));
    *out_ops_json = copy_out(pb::store::ops_to_json(script));
  });
}

pb_status pb_apply_diff(const char* base, size_t len, const char* ops_json, char** out_text) {
  return guarded([&] {
    require(ops_json, "ops_json");
    require(out_text, "out_text");
    *out_text = copy_out(pb::store::apply_script(view(base, len), pb::store::ops_from_json(ops_json)));
  });
}

pb_status pb_store_open(const char* path, pb_store** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto handle = std::make_unique<pb_store>();
    if (path == nullptr) {
      handle->store = std::make_shared<pb::store::MemoryStore>();
    } else {
      handle->store = std::make_shared<pb::store::SqliteStore>(path);
    }
    *out = handle.release();
  });
}

void pb_store_free(pb_store* store) { delete store; }

pb_status pb_store_export(const pb_store* store, const char* filter_json, char** out_ndjson) {
  return guarded([&] {
    require(store, "store");
    require(out_ndjson, "out_ndjson");
    json f = filter_json == nullptr ? json::object() : json::parse(filter_json);
    pb::store::ExportFilter filter;
    if (f.contains("course")) filter.course_id = f["course"].get<std::string>();
    if (f.contains("tutorial")) filter.tutorial_id = f["tutorial"].get<std::string>();
    if (f.contains("from")) filter.from = f["from"].get<pb::store::Millis>();
    if (f.contains("to")) filter.to = f["to"].get<pb::store::Millis>();
    std::string out;
    for (const auto& d : store->store->diffs(filter)) {
      out += pb::store::export_record(d);
      out += '\n';
    }
    *out_ndjson = copy_out(out);
  });
}

pb_status pb_server_from_env(pb_server** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto handle = std::make_unique<pb_server>();
    handle->app = std::make_unique<pb::api::Application>(
        pb::api::config_from_env(pb::api::process_env()));
    *out = handle.release();
  });
}

pb_status pb_server_start(pb_server* server) {
  return guarded([&] {
    require(server, "server");
    server->app->start();
  });
}

uint16_t pb_server_port(const pb_server* server) {
  return server == nullptr ? 0 : server->app->port();
}

void pb_server_wait(pb_server* server) {
  if (server != nullptr) server->app->wait();
}

void pb_server_stop(pb_server* server) {
  if (server != nullptr) server->app->stop();
}

void pb_server_free(pb_server* server) { delete server; }

pb_status pb_generate_keypair(char** out_private_pem, char** out_public_pem) {
  return guarded([&] {
    require(out_private_pem, "out_private_pem");
    require(out_public_pem, "out_public_pem");
    auto pair = pb::api::generate_rsa_keypair();
    *out_private_pem = copy_out(pair.private_pem);
    *out_public_pem = copy_out(pair.public_pem);
  });
}

pb_status pb_sign_token(const char* claims_json, const char* private_pem, char** out_token) {
  return guarded([&] {
    require(claims_json, "claims_json");
    require(private_pem, "private_pem");
    require(out_token, "out_token");
    *out_token = copy_out(pb::api::sign_token(json::parse(claims_json), private_pem));
  });
}

}  // extern "C"
