#include "api/service.hpp"

#include <boost/asio/post.hpp>
#include <boost/uuid/random_generator.hpp>
#include <boost/uuid/uuid_io.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <future>

#include "common/error.hpp"
#include "common/utf8.hpp"
#include "feedback/enrich.hpp"
#include "syntax/completion.hpp"
#include "syntax/lexer.hpp"
#include "syntax/outline.hpp"
#include "syntax/restrictions.hpp"
#include "syntax/symbols.hpp"

namespace pb::api {

using nlohmann::json;

namespace {

const std::vector<Endpoint> kEndpoints = {
    {"GET", "/v1/courses", Role::student},
    {"POST", "/v1/courses", Role::teacher},
    {"GET", "/v1/tutorials/{id}", Role::student},
    {"POST", "/v1/tutorials", Role::teacher},
    {"POST", "/v1/checks", Role::student},
    {"GET", "/v1/checks/{id}", Role::student},
    {"POST", "/v1/progress/{id}/reset", Role::student},
    {"GET", "/v1/rules", Role::student},
    {"GET", "/v1/symbols", Role::student},
    {"POST", "/v1/tokenize", Role::student},
    {"POST", "/v1/complete", Role::student},
    {"GET", "/v1/export", Role::teacher},
    {"GET", "/v1/admin/pool", Role::admin},
    {"POST", "/v1/admin/pool/scale", Role::admin},
    {"DELETE", "/v1/admin/users/{id}", Role::admin},
};

int http_status(Errc code) {
  switch (code) {
    case Errc::ok: return 200;
    case Errc::invalid_argument:
    case Errc::format_error:
    case Errc::out_of_range: return 400;
    case Errc::unauthenticated: return 401;
    case Errc::forbidden: return 403;
    case Errc::not_found:
    case Errc::unknown_user: return 404;
    case Errc::mismatch: return 409;
    case Errc::invariant_violation: return 422;
    case Errc::protocol_error: return 502;
    case Errc::no_healthy_instance:
    case Errc::all_at_capacity: return 503;
    case Errc::timeout: return 504;
    case Errc::storage_failure:
    case Errc::io_error:
    case Errc::internal: return 500;
  }
  return 500;
}

json error_body(std::string_view code, std::string_view message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

HttpResponse reply(int status, const json& body) {
  return HttpResponse{status, body.dump(), "application/json"};
}

HttpResponse error_reply(Errc code, std::string_view message) {
  return reply(http_status(code), error_body(errc_name(code), message));
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string percent_decode(std::string_view text, bool plus_is_space) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '%' && i + 2 < text.size()) {
      int hi = hex_value(text[i + 1]);
      int lo = hex_value(text[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out.push_back(static_cast<char>(hi * 16 + lo));
        i += 2;
        continue;
      }
    }
    out.push_back(plus_is_space && c == '+' ? ' ' : c);
  }
  return out;
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= path.size()) {
    std::size_t next = path.find('/', pos);
    if (next == std::string_view::npos) next = path.size();
    if (next > pos) out.push_back(percent_decode(path.substr(pos, next - pos), false));
    pos = next + 1;
  }
  return out;
}

std::map<std::string, std::string> parse_query(std::string_view query) {
  std::map<std::string, std::string> out;
  std::size_t pos = 0;
  while (pos < query.size()) {
    std::size_t next = query.find('&', pos);
    if (next == std::string_view::npos) next = query.size();
    std::string_view pair = query.substr(pos, next - pos);
    std::size_t eq = pair.find('=');
    std::string key = percent_decode(pair.substr(0, eq), true);
    std::string value =
        eq == std::string_view::npos ? std::string() : percent_decode(pair.substr(eq + 1), true);
    if (!key.empty()) out[key] = value;
    pos = next + 1;
  }
  return out;
}

// Path segments against a template; placeholders capture one segment.
bool match_path(const std::vector<std::string>& segments, std::string_view pattern,
                std::vector<std::string>* captures) {
  std::vector<std::string> parts = split_path(pattern);
  if (parts.size() != segments.size()) return false;
  std::vector<std::string> found;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i] == "{id}") {
      found.push_back(segments[i]);
    } else if (parts[i] != segments[i]) {
      return false;
    }
  }
  if (captures != nullptr) *captures = std::move(found);
  return true;
}

std::optional<Role> role_from_string(std::string_view name) {
  if (name == "student") return Role::student;
  if (name == "teacher") return Role::teacher;
  if (name == "admin") return Role::admin;
  return std::nullopt;
}

json span_json(const syntax::SourceSpan& span) {
  return {{"start", span.start}, {"end", span.end}};
}

json diagnostic_json(const syntax::Diagnostic& d) {
  return {{"severity", syntax::to_string(d.severity)},
          {"layer", syntax::to_string(d.layer)},
          {"code", d.code},
          {"message", d.message},
          {"block_id", d.block_id},
          {"span", span_json(d.span)}};
}

json item_json(const feedback::FeedbackItem& item) {
  json out = {{"severity", syntax::to_string(item.severity)},
              {"kind", syntax::to_string(item.kind)},
              {"code", item.code},
              {"tutorial_level", item.tutorial_level},
              {"block_id", item.tutorial_level ? json(nullptr) : json(item.block_id)},
              {"span", item.tutorial_level ? json(nullptr) : span_json(item.span)},
              {"multi_segment", item.multi_segment},
              {"text", item.text},
              {"hints", item.hints}};
  if (item.kind == syntax::Layer::prover) out["label"] = "prover output";
  if (!item.notice.empty()) out["notice"] = item.notice;
  return out;
}

const std::string& required_string(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_string()) {
    throw Error(Errc::invalid_argument, std::string("field '") + key + "' must be a string");
  }
  return it->get_ref<const std::string&>();
}

std::optional<std::string> optional_string(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(Errc::invalid_argument, std::string("field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

std::vector<std::string> string_list(const json& body, const char* key) {
  std::vector<std::string> out;
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return out;
  if (!it->is_array()) {
    throw Error(Errc::invalid_argument, std::string("field '") + key + "' must be an array");
  }
  for (const json& v : *it) {
    if (!v.is_string()) {
      throw Error(Errc::invalid_argument,
                  std::string("field '") + key + "' must hold strings");
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::map<std::string, std::string> localized_field(const json& body, const char* key) {
  std::map<std::string, std::string> out;
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return out;
  if (it->is_string()) {
    out["en"] = it->get<std::string>();
  } else if (it->is_object()) {
    for (auto& [locale, text] : it->items()) {
      if (!text.is_string()) {
        throw Error(Errc::invalid_argument, std::string("field '") + key + "' must map to strings");
      }
      out[locale] = text.get<std::string>();
    }
  } else {
    throw Error(Errc::invalid_argument, std::string("field '") + key + "' must be text");
  }
  return out;
}

std::optional<store::Millis> millis_param(const std::map<std::string, std::string>& q,
                                          const char* key) {
  auto it = q.find(key);
  if (it == q.end() || it->second.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    long long v = std::stoll(it->second, &used);
    if (used == it->second.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(Errc::invalid_argument, std::string("parameter '") + key + "' must be milliseconds");
}

std::string param(const std::map<std::string, std::string>& q, const char* key) {
  auto it = q.find(key);
  return it == q.end() ? std::string() : it->second;
}

bool is_blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(),
                     [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; });
}

}  // namespace

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::student: return "student";
    case Role::teacher: return "teacher";
    case Role::admin: return "admin";
  }
  return "student";
}

bool Principal::has(Role role) const {
  return std::any_of(roles.begin(), roles.end(),
                     [&](Role held) { return static_cast<int>(held) >= static_cast<int>(role); });
}

const std::vector<Endpoint>& endpoints() { return kEndpoints; }

struct Service::UserLane {
  explicit UserLane(boost::asio::thread_pool& pool) : strand(pool.get_executor()) {}
  boost::asio::strand<boost::asio::thread_pool::executor_type> strand;
};

struct Service::CheckJob {
  std::string user_id;
  std::string request_id;
  std::string course_id;  // empty for staff checks outside a course
  std::string locale;
  std::shared_ptr<const tutorial::Tutorial> tutorial;
  const syntax::SyntaxProfile* profile = nullptr;
  std::map<std::string, std::string> blocks;
};

Service::Service(ServiceConfig config, TokenVerifier verifier,
                 std::shared_ptr<store::Store> store, std::shared_ptr<prover::Pool> pool)
    : config_(std::move(config)),
      verifier_(std::move(verifier)),
      store_(std::move(store)),
      pool_(std::move(pool)),
      history_(store_),
      rules_(feedback::bundled_rules()),
      hints_(feedback::bundled_hints()),
      preamble_(rules_.alias_declarations()),
      workers_(std::max<std::size_t>(1, config_.check_workers)) {
  if (!config_.now_seconds) {
    config_.now_seconds = [] {
      return std::chrono::duration_cast<std::chrono::seconds>(
                 std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  }
}

Service::~Service() {
  workers_.join();
  std::lock_guard lock(sessions_mutex_);
  for (auto& [key, entry] : sessions_) pool_->release_session(entry.handle);
  sessions_.clear();
}

HttpResponse Service::handle(const HttpRequest& request) {
  std::string_view target = request.target;
  std::size_t qmark = target.find('?');
  std::vector<std::string> segments = split_path(target.substr(0, qmark));
  std::map<std::string, std::string> query =
      qmark == std::string_view::npos ? std::map<std::string, std::string>{}
                                      : parse_query(target.substr(qmark + 1));

  const Endpoint* endpoint = nullptr;
  bool path_known = false;
  for (const Endpoint& e : kEndpoints) {
    if (!match_path(segments, e.path, nullptr)) continue;
    path_known = true;
    if (e.method == request.method) {
      endpoint = &e;
      break;
    }
  }
  if (endpoint == nullptr) {
    if (path_known) {
      return reply(405, error_body("method-not-allowed", "method not allowed"));
    }
    return error_reply(Errc::not_found, "no such endpoint");
  }

  try {
    if (request.authorization.empty()) {
      throw Error(Errc::unauthenticated, "missing bearer token");
    }
    Principal principal = authenticate(request.authorization);
    if (!principal.has(endpoint->minimum)) {
      throw Error(Errc::forbidden,
                  "requires the " + std::string(to_string(endpoint->minimum)) + " role");
    }
    if (request.body.size() > config_.max_body_bytes) {
      throw Error(Errc::invalid_argument, "request body too large");
    }
    return dispatch(principal, request.method, segments, query, request.body);
  } catch (const Error& e) {
    return error_reply(e.code(), e.what());
  } catch (const json::exception& e) {
    return error_reply(Errc::invalid_argument, e.what());
  } catch (const std::exception& e) {
    spdlog::error("request {} {} failed: {}", request.method, target.substr(0, qmark), e.what());
    return error_reply(Errc::internal, "internal error");
  }
}

Principal Service::authenticate(std::string_view credentials) {
  std::string_view token = credentials;
  constexpr std::string_view kBearer = "Bearer ";
  if (token.size() >= kBearer.size() &&
      utf8::ascii_lower(token.substr(0, kBearer.size())) == "bearer ") {
    token.remove_prefix(kBearer.size());
  }
  while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
  if (token.empty()) throw Error(Errc::unauthenticated, "missing bearer token");

  Claims claims = verifier_.verify(token, config_.now_seconds());
  Principal principal;
  principal.issuer = claims.issuer;
  for (const std::string& name : claims.roles) {
    if (auto role = role_from_string(name)) principal.roles.insert(*role);
  }
  if (principal.roles.empty()) {
    throw Error(Errc::forbidden, "token carries no recognized role");
  }
  bool admin = principal.roles.count(Role::admin) > 0;

  std::lock_guard lock(mutex_);
  if (auto existing = store_->find_profile(claims.issuer, claims.username)) {
    if (existing->admin != admin) {
      existing->admin = admin;
      store_->put_profile(*existing);
    }
    principal.user_id = existing->user_id;
  } else {
    static thread_local boost::uuids::random_generator generate;
    store::UserProfile profile{boost::uuids::to_string(generate()), claims.username,
                               claims.issuer, admin, store::now_ms()};
    store_->put_profile(profile);
    principal.user_id = profile.user_id;
    spdlog::info("provisioned user {}", profile.user_id);
  }
  return principal;
}

HttpResponse Service::dispatch(const Principal& p, const std::string& method,
                               const std::vector<std::string>& seg,
                               const std::map<std::string, std::string>& query,
                               const std::string& body_text) {
  auto body = [&] {
    if (body_text.empty()) return json::object();
    json parsed = json::parse(body_text);
    if (!parsed.is_object()) throw Error(Errc::invalid_argument, "body must be a JSON object");
    return parsed;
  };
  auto locale = [&](const std::string& requested) {
    return requested == "en" || requested == "de" ? requested : config_.locale_default;
  };
  std::vector<std::string> cap;
  const std::string& resource = seg[1];
  if (resource == "courses") {
    return method == "GET" ? get_courses(p) : post_courses(p, body());
  }
  if (resource == "tutorials") {
    if (method == "GET") return get_tutorial(p, seg[2], locale(param(query, "locale")));
    return post_tutorial(p, body());
  }
  if (resource == "checks") {
    return method == "GET" ? get_check(p, seg[2]) : post_check(p, body());
  }
  if (resource == "progress") return post_reset(p, seg[2]);
  if (resource == "rules") return get_rules(p, query);
  if (resource == "symbols") return get_symbols(query);
  if (resource == "tokenize") return post_tokenize(body());
  if (resource == "complete") return post_complete(p, body());
  if (resource == "export") return get_export(query);
  if (match_path(seg, "/v1/admin/pool", nullptr)) return get_pool();
  if (match_path(seg, "/v1/admin/pool/scale", nullptr)) return post_scale(body());
  if (match_path(seg, "/v1/admin/users/{id}", &cap)) return delete_user(cap[0]);
  return error_reply(Errc::not_found, "no such endpoint");
}

// ---- courses ----------------------------------------------------------

HttpResponse Service::get_courses(const Principal& p) {
  bool staff = p.has(Role::teacher);
  json out = json::array();
  for (const store::Course& c : store_->courses()) {
    if (!may_access_course(p, c)) continue;
    json entry = {{"id", c.id},
                  {"title", c.title},
                  {"locales", c.locales},
                  {"profile", c.profile},
                  {"tutorials", c.tutorials}};
    if (staff) {
      json roster = json::array();
      for (const std::string& user_id : c.roster) {
        json member = {{"user_id", user_id}};
        if (auto profile = store_->profile(user_id)) member["username"] = profile->username;
        roster.push_back(std::move(member));
      }
      entry["roster"] = std::move(roster);
      entry["owner"] = c.owner;
    }
    out.push_back(std::move(entry));
  }
  return reply(200, {{"courses", out}});
}

HttpResponse Service::post_courses(const Principal& p, const json& body) {
  std::string action = body.contains("action") ? required_string(body, "action") : "create";
  const std::string& id = required_string(body, "id");
  if (action == "upload-tutorial") {
    json upload = body;
    upload["course_id"] = id;
    return post_tutorial(p, upload);
  }

  auto check_profile = [](const std::string& name) {
    if (!name.empty() && syntax::find_bundled_profile(name) == nullptr) {
      throw Error(Errc::invalid_argument, "unknown profile '" + name + "'");
    }
  };
  auto check_tutorials = [&](const std::vector<std::string>& ids) {
    for (const std::string& t : ids) {
      if (!store_->tutorial_source(t)) throw Error(Errc::not_found, "no tutorial '" + t + "'");
    }
  };

  store::Course course;
  bool roster_changed = false;
  int status = 200;
  if (action == "create") {
    if (store_->course(id)) throw Error(Errc::mismatch, "course '" + id + "' already exists");
    course.id = id;
    course.title = localized_field(body, "title");
    if (body.contains("locales")) {
      std::vector<std::string> locales = string_list(body, "locales");
      course.locales = {locales.begin(), locales.end()};
    }
    course.profile = optional_string(body, "profile").value_or("");
    check_profile(course.profile);
    course.tutorials = string_list(body, "tutorials");
    check_tutorials(course.tutorials);
    for (const std::string& username : string_list(body, "roster")) {
      course.roster.insert(resolve_user(username));
    }
    course.owner = p.user_id;
    roster_changed = !course.roster.empty();
    status = 201;
  } else {
    auto existing = store_->course(id);
    if (!existing) throw Error(Errc::not_found, "no course '" + id + "'");
    course = std::move(*existing);
    if (!p.has(Role::admin) && course.owner != p.user_id) {
      throw Error(Errc::forbidden, "only the course owner may change it");
    }
    if (action == "update") {
      if (body.contains("title")) course.title = localized_field(body, "title");
      if (body.contains("locales")) {
        std::vector<std::string> locales = string_list(body, "locales");
        course.locales = {locales.begin(), locales.end()};
      }
      if (body.contains("tutorials")) {
        course.tutorials = string_list(body, "tutorials");
        check_tutorials(course.tutorials);
      }
    } else if (action == "enroll") {
      for (const std::string& username : string_list(body, "usernames")) {
        roster_changed |= course.roster.insert(resolve_user(username)).second;
      }
      for (const std::string& user_id : string_list(body, "unenroll")) {
        roster_changed |= course.roster.erase(user_id) > 0;
      }
    } else if (action == "set-profile") {
      course.profile = required_string(body, "profile");
      check_profile(course.profile);
    } else {
      throw Error(Errc::invalid_argument, "unknown action '" + action + "'");
    }
  }
  store_->put_course(course);
  if (roster_changed) resize_pool();
  return reply(status, {{"id", course.id},
                        {"title", course.title},
                        {"locales", course.locales},
                        {"profile", course.profile},
                        {"tutorials", course.tutorials},
                        {"roster_size", course.roster.size()}});
}

std::string Service::resolve_user(const std::string& username) {
  if (username.empty()) throw Error(Errc::invalid_argument, "empty username");
  std::lock_guard lock(mutex_);
  if (auto existing = store_->find_profile(config_.default_issuer, username)) {
    return existing->user_id;
  }
  static thread_local boost::uuids::random_generator generate;
  store::UserProfile profile{boost::uuids::to_string(generate()), username,
                             config_.default_issuer, false, store::now_ms()};
  store_->put_profile(profile);
  return profile.user_id;
}

void Service::resize_pool() {
  std::vector<std::size_t> rosters;
  for (const store::Course& c : store_->courses()) rosters.push_back(c.roster.size());
  int target = prover::pool_target(pool_->config(), rosters);
  if (target != pool_->target()) {
    spdlog::info("resizing prover pool to {}", target);
    pool_->scale(target);
  }
}

bool Service::may_access_course(const Principal& p, const store::Course& course) const {
  if (p.has(Role::admin)) return true;
  if (p.has(Role::teacher) && course.owner == p.user_id) return true;
  return course.roster.count(p.user_id) > 0;
}

std::optional<store::Course> Service::course_for(const Principal& p,
                                                 const std::string& tutorial_id,
                                                 const std::string& course_id) {
  auto contains = [&](const store::Course& c) {
    return std::find(c.tutorials.begin(), c.tutorials.end(), tutorial_id) != c.tutorials.end();
  };
  if (!course_id.empty()) {
    auto c = store_->course(course_id);
    if (!c) throw Error(Errc::not_found, "no course '" + course_id + "'");
    if (!may_access_course(p, *c)) throw Error(Errc::forbidden, "not enrolled in this course");
    if (!contains(*c)) {
      throw Error(Errc::not_found, "course does not contain tutorial '" + tutorial_id + "'");
    }
    return c;
  }
  for (store::Course& c : store_->courses()) {
    if (contains(c) && may_access_course(p, c)) return std::move(c);
  }
  if (p.has(Role::teacher)) return std::nullopt;
  throw Error(Errc::forbidden, "not enrolled in a course with this tutorial");
}

// ---- tutorials --------------------------------------------------------

std::shared_ptr<const tutorial::Tutorial> Service::tutorial(const std::string& id) {
  std::lock_guard lock(mutex_);
  if (auto it = tutorials_.find(id); it != tutorials_.end()) return it->second;
  auto source = store_->tutorial_source(id);
  if (!source) return nullptr;
  auto loaded = std::make_shared<const tutorial::Tutorial>(tutorial::load_tutorial(*source));
  tutorials_[id] = loaded;
  return loaded;
}

const syntax::SyntaxProfile& Service::profile_for(const store::Course* course,
                                                  const tutorial::Tutorial& t) const {
  static const syntax::SyntaxProfile permissive = syntax::permissive_profile();
  const std::string& name = course != nullptr && !course->profile.empty() ? course->profile
                                                                          : t.profile;
  if (const syntax::SyntaxProfile* found = syntax::find_bundled_profile(name)) return *found;
  return permissive;
}

tutorial::TutorialState Service::load_state(const std::string& user_id,
                                            const tutorial::Tutorial& t) {
  tutorial::TutorialState fresh = tutorial::fresh_state(t, user_id);
  auto stored = store_->state(user_id, t.id);
  if (!stored) return fresh;
  // Keeps what still fits a tutorial that was re-uploaded with other blocks.
  for (auto& [block, content] : fresh.contents) {
    if (auto it = stored->contents.find(block); it != stored->contents.end()) {
      content = it->second;
    }
    if (auto it = stored->outcomes.find(block); it != stored->outcomes.end()) {
      fresh.outcomes[block] = it->second;
    }
  }
  return fresh;
}

HttpResponse Service::get_tutorial(const Principal& p, const std::string& id,
                                   const std::string& locale) {
  auto t = tutorial(id);
  if (!t) throw Error(Errc::not_found, "no tutorial '" + id + "'");
  bool staff = p.has(Role::teacher);
  if (!staff) course_for(p, id, "");
  tutorial::TutorialState state = load_state(p.user_id, *t);

  json sections = json::array();
  for (const tutorial::Section& section : t->sections) {
    json blocks = json::array();
    for (const tutorial::Block& b : section.blocks) {
      if (b.kind == tutorial::BlockKind::hidden && !staff) continue;
      json block = {{"id", b.id}, {"kind", tutorial::to_string(b.kind)}};
      switch (b.kind) {
        case tutorial::BlockKind::text:
          block["text"] = tutorial::localized(b.content, locale);
          break;
        case tutorial::BlockKind::example:
          block["code"] = b.code;
          break;
        case tutorial::BlockKind::hidden:
          block["code"] = b.code;
          block["hidden"] = true;
          break;
        case tutorial::BlockKind::task:
          block["initial"] = b.initial;
          block["content"] = state.contents[b.id];
          block["outcome"] = tutorial::to_string(state.outcomes[b.id]);
          break;
      }
      blocks.push_back(std::move(block));
    }
    sections.push_back({{"title", tutorial::localized(section.title, locale)},
                        {"blocks", std::move(blocks)}});
  }
  json out = {{"id", t->id},
              {"title", tutorial::localized(t->title, locale)},
              {"profile", t->profile},
              {"locale", locale},
              {"sections", std::move(sections)}};
  if (staff) {
    out["header"] = t->header_text();
    out["footer"] = t->footer;
  }
  return reply(200, out);
}

HttpResponse Service::post_tutorial(const Principal& p, const json& body) {
  const std::string& source = required_string(body, "source");
  std::optional<std::string> course_id = optional_string(body, "course_id");
  std::string locale = optional_string(body, "locale").value_or(config_.locale_default);

  tutorial::Tutorial t = tutorial::load_tutorial(source);
  std::optional<store::Course> course;
  if (course_id) {
    course = store_->course(*course_id);
    if (!course) throw Error(Errc::not_found, "no course '" + *course_id + "'");
    if (!p.has(Role::admin) && course->owner != p.user_id) {
      throw Error(Errc::forbidden, "only the course owner may add tutorials");
    }
  }
  if (!t.profile.empty() && syntax::find_bundled_profile(t.profile) == nullptr) {
    throw Error(Errc::invalid_argument, "unknown profile '" + t.profile + "'");
  }
  std::vector<syntax::Diagnostic> diagnostics =
      tutorial::validate_tutorial(t, profile_for(course ? &*course : nullptr, t), locale);
  json listed = json::array();
  bool failed = false;
  for (const syntax::Diagnostic& d : diagnostics) {
    listed.push_back(diagnostic_json(d));
    failed |= d.severity == syntax::Severity::error;
  }
  if (failed) {
    json out = error_body("validation-failed", "tutorial failed validation");
    out["diagnostics"] = std::move(listed);
    return reply(422, out);
  }

  {
    std::lock_guard lock(mutex_);
    store_->put_tutorial_source(t.id, source);
    tutorials_.erase(t.id);
  }
  if (course && std::find(course->tutorials.begin(), course->tutorials.end(), t.id) ==
                    course->tutorials.end()) {
    course->tutorials.push_back(t.id);
    store_->put_course(*course);
  }
  spdlog::info("stored tutorial {}", t.id);
  return reply(201, {{"id", t.id}, {"diagnostics", std::move(listed)}});
}

void Service::seed_tutorial(std::string_view source) {
  tutorial::Tutorial t = tutorial::load_tutorial(source);
  for (const syntax::Diagnostic& d : tutorial::validate_tutorial(t, profile_for(nullptr, t))) {
    if (d.severity == syntax::Severity::error) {
      throw Error(Errc::invariant_violation,
                  "tutorial '" + t.id + "' block '" + d.block_id + "': " + d.message);
    }
  }
  std::lock_guard lock(mutex_);
  store_->put_tutorial_source(t.id, source);
  tutorials_.erase(t.id);
}

// ---- checks -----------------------------------------------------------

HttpResponse Service::post_check(const Principal& p, const json& body) {
  std::string request_id = enqueue_check(p, body);
  return reply(202, {{"request_id", request_id}, {"state", "pending"}});
}

std::string Service::enqueue_check(const Principal& p, const json& body) {
  auto job = std::make_shared<CheckJob>();
  job->user_id = p.user_id;
  const std::string& tutorial_id = required_string(body, "tutorial_id");
  job->tutorial = tutorial(tutorial_id);
  if (!job->tutorial) throw Error(Errc::not_found, "no tutorial '" + tutorial_id + "'");
  std::optional<store::Course> course =
      course_for(p, tutorial_id, optional_string(body, "course_id").value_or(""));
  job->course_id = course ? course->id : "";
  job->profile = &profile_for(course ? &*course : nullptr, *job->tutorial);
  std::string locale = optional_string(body, "locale").value_or(config_.locale_default);
  job->locale = locale == "en" || locale == "de" ? locale : config_.locale_default;

  auto blocks = body.find("blocks");
  if (blocks == body.end() || !blocks->is_object()) {
    throw Error(Errc::invalid_argument, "field 'blocks' must map block ids to contents");
  }
  for (auto& [block_id, content] : blocks->items()) {
    const tutorial::Block* b = job->tutorial->find_block(block_id);
    if (b == nullptr || !b->editable()) {
      throw Error(Errc::invalid_argument, "'" + block_id + "' is not a task block");
    }
    if (!content.is_string()) throw Error(Errc::invalid_argument, "block content must be text");
    const std::string& text = content.get_ref<const std::string&>();
    if (!utf8::is_valid(text)) throw Error(Errc::invalid_argument, "content is not valid UTF-8");
    job->blocks[block_id] = text;
  }

  {
    std::lock_guard lock(checks_mutex_);
    job->request_id = optional_string(body, "request_id").value_or("");
    if (job->request_id.empty()) job->request_id = "r" + std::to_string(next_request_++);
    std::string key = p.user_id + "\n" + job->request_id;
    if (checks_.count(key) > 0) {
      throw Error(Errc::mismatch, "request id '" + job->request_id + "' already used");
    }
    checks_[key] = {{"request_id", job->request_id}, {"state", "pending"}};
    ++in_flight_;
  }

  boost::asio::post(lane(p.user_id)->strand, [this, job] {
    json result;
    try {
      result = run_check(*job);
    } catch (const Error& e) {
      result = {{"request_id", job->request_id},
                {"status", "error"},
                {"error", {{"code", errc_name(e.code())}, {"message", e.what()}}}};
    } catch (const std::exception& e) {
      spdlog::error("check {} failed: {}", job->request_id, e.what());
      result = {{"request_id", job->request_id},
                {"status", "error"},
                {"error", {{"code", "internal"}, {"message", "internal error"}}}};
    }
    {
      std::lock_guard lock(checks_mutex_);
      checks_[job->user_id + "\n" + job->request_id] = {
          {"request_id", job->request_id}, {"state", "done"}, {"result", result}};
    }
    deliver(job->user_id, {{"type", "check-result"},
                           {"request_id", job->request_id},
                           {"payload", result}});
    if (result.contains("feedback")) {
      for (const json& item : result["feedback"]) {
        if (item.value("tutorial_level", false)) {
          deliver(job->user_id, {{"type", "notice"},
                                 {"request_id", job->request_id},
                                 {"payload", {{"text", item.value("notice", "")}}}});
          break;
        }
      }
    }
    std::lock_guard lock(checks_mutex_);
    --in_flight_;
    checks_cv_.notify_all();
  });
  return job->request_id;
}

json Service::run_check(const CheckJob& job) {
  expire_idle_sessions();
  const tutorial::Tutorial& t = *job.tutorial;
  tutorial::TutorialState state = load_state(job.user_id, t);
  std::map<std::string, std::string> effective = state.contents;
  for (const auto& [block, content] : job.blocks) effective[block] = content;

  json out = {{"request_id", job.request_id},
              {"tutorial_id", t.id},
              {"course_id", job.course_id}};
  json diagnostics = json::array();
  json feedback_items = json::array();
  std::vector<feedback::FeedbackItem> items;
  std::set<std::string> blocked;
  for (const auto& [block, content] : effective) {
    syntax::OutlineResult outlined = syntax::outline(syntax::tokenize(content), job.locale);
    std::vector<syntax::Diagnostic> found = outlined.diagnostics;
    for (syntax::Diagnostic& d :
         syntax::check_restrictions(outlined.commands, *job.profile, job.locale)) {
      found.push_back(std::move(d));
    }
    for (syntax::Diagnostic& d : found) {
      d.block_id = block;
      if (job.profile->blocking && d.layer == syntax::Layer::restriction &&
          d.severity == syntax::Severity::error) {
        blocked.insert(block);
      }
      diagnostics.push_back(diagnostic_json(d));
      items.push_back(feedback::from_diagnostic(d, hints_, job.locale));
    }
  }
  out["diagnostics"] = diagnostics;

  if (!blocked.empty()) {
    for (const std::string& block : blocked) state.outcomes[block] = tutorial::Outcome::failed;
    store_->put_state(state);
    for (const feedback::FeedbackItem& item : items) feedback_items.push_back(item_json(item));
    out["status"] = "restricted";
    out["feedback"] = feedback_items;
    out["states"] = json::array();
    out["outcomes"] = json::object();
    for (const auto& [block, outcome] : state.outcomes) {
      out["outcomes"][block] = tutorial::to_string(outcome);
    }
    return out;
  }

  store::Millis at = store::now_ms();
  for (const auto& [block, content] : job.blocks) {
    history_.record_submission(job.user_id, job.course_id, t, block, content, at);
  }
  state.contents = effective;
  store_->put_state(state);

  tutorial::AssembledTheory assembled = tutorial::assemble_theory(t, state, preamble_);
  prover::ProverResult result;
  bool checked = false;
  for (int attempt = 0; attempt < 2 && !checked; ++attempt) {
    prover::SessionHandle handle;
    try {
      handle = session_for(job.user_id, job.course_id);
    } catch (const Error& e) {
      out["status"] = "error";
      out["error"] = {{"code", errc_name(e.code())}, {"message", e.what()}};
      out["feedback"] = json::array();
      for (const feedback::FeedbackItem& item : items) out["feedback"].push_back(item_json(item));
      out["states"] = json::array();
      out["outcomes"] = json::object();
      for (const auto& [block, outcome] : state.outcomes) {
        out["outcomes"][block] = tutorial::to_string(outcome);
      }
      return out;
    }
    try {
      result = pool_->check_theory(handle, assembled.text);
      checked = true;
    } catch (const Error& e) {
      // The instance went away underneath the session; start over once.
      if (e.code() != Errc::invalid_argument) throw;
      drop_session(job.user_id, job.course_id, false);
    }
  }
  if (!checked) throw Error(Errc::no_healthy_instance, "no prover session could be kept");
  if (result.status == prover::ResultStatus::timeout ||
      result.status == prover::ResultStatus::protocol_error) {
    drop_session(job.user_id, job.course_id, false);
  }

  for (feedback::FeedbackItem& item : feedback::enrich(result, assembled, hints_, job.locale)) {
    items.push_back(std::move(item));
  }
  for (const feedback::FeedbackItem& item : items) feedback_items.push_back(item_json(item));

  json states = json::array();
  for (const prover::ProofState& ps : result.states) {
    if (ps.position > assembled.text.size()) continue;
    tutorial::MappedSpan mapped = tutorial::map_span(assembled, {ps.position, ps.position});
    if (mapped.hidden) continue;
    states.push_back({{"block_id", mapped.block_id},
                      {"pos", mapped.local.start},
                      {"text", ps.text},
                      {"subgoals", ps.open_subgoals}});
  }

  bool finished = result.status == prover::ResultStatus::finished_ok ||
                  result.status == prover::ResultStatus::finished_failed;
  if (finished) {
    bool gated = false;
    for (const tutorial::Block* b : t.task_blocks()) {
      if (gated) {
        state.outcomes[b->id] = tutorial::Outcome::unchecked;
        continue;
      }
      bool flawed = std::any_of(items.begin(), items.end(), [&](const feedback::FeedbackItem& i) {
        return !i.tutorial_level && i.block_id == b->id &&
               (i.severity == syntax::Severity::error ||
                i.severity == syntax::Severity::warning);
      });
      if (flawed) {
        state.outcomes[b->id] = tutorial::Outcome::failed;
        gated = config_.gate_after_failed_task;
      } else if (is_blank(state.contents[b->id])) {
        state.outcomes[b->id] = tutorial::Outcome::unchecked;
      } else {
        state.outcomes[b->id] = tutorial::Outcome::ok;
      }
    }
    store_->put_state(state);
  }

  out["status"] = prover::to_string(result.status);
  if (!finished) {
    out["error"] = {{"code", prover::to_string(result.status)},
                    {"message", result.messages.empty() ? std::string("prover failure")
                                                        : result.messages.front().text}};
  }
  out["feedback"] = feedback_items;
  out["states"] = states;
  out["outcomes"] = json::object();
  for (const auto& [block, outcome] : state.outcomes) {
    out["outcomes"][block] = tutorial::to_string(outcome);
  }
  return out;
}

HttpResponse Service::get_check(const Principal& p, const std::string& id) {
  std::lock_guard lock(checks_mutex_);
  auto it = checks_.find(p.user_id + "\n" + id);
  if (it == checks_.end()) throw Error(Errc::not_found, "no check '" + id + "'");
  return reply(200, it->second);
}

void Service::wait_idle() {
  std::unique_lock lock(checks_mutex_);
  checks_cv_.wait(lock, [&] { return in_flight_ == 0; });
}

HttpResponse Service::post_reset(const Principal& p, const std::string& tutorial_id) {
  auto t = tutorial(tutorial_id);
  if (!t) throw Error(Errc::not_found, "no tutorial '" + tutorial_id + "'");
  if (!p.has(Role::teacher)) course_for(p, tutorial_id, "");
  // Runs on the user's lane so that it cannot interleave with a check.
  std::promise<tutorial::TutorialState> done;
  auto future = done.get_future();
  boost::asio::post(lane(p.user_id)->strand, [&] {
    try {
      tutorial::TutorialState state = tutorial::reset_progress(load_state(p.user_id, *t), *t);
      store_->put_state(state);
      done.set_value(std::move(state));
    } catch (...) {
      done.set_exception(std::current_exception());
    }
  });
  tutorial::TutorialState state = future.get();
  json outcomes = json::object();
  for (const auto& [block, outcome] : state.outcomes) {
    outcomes[block] = tutorial::to_string(outcome);
  }
  return reply(200, {{"tutorial_id", t->id},
                     {"contents", state.contents},
                     {"outcomes", std::move(outcomes)}});
}

std::shared_ptr<Service::UserLane> Service::lane(const std::string& user_id) {
  std::lock_guard lock(lanes_mutex_);
  auto& slot = lanes_[user_id];
  if (!slot) slot = std::make_shared<UserLane>(workers_);
  return slot;
}

// ---- prover sessions --------------------------------------------------

prover::SessionHandle Service::session_for(const std::string& user_id,
                                           const std::string& course_id) {
  auto key = std::make_pair(user_id, course_id);
  {
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(key);
    if (it != sessions_.end()) {
      if (pool_->is_live(it->second.handle)) {
        it->second.last_used = std::chrono::steady_clock::now();
        return it->second.handle;
      }
      sessions_.erase(it);
    }
  }
  prover::SessionHandle handle = pool_->acquire_session();
  std::lock_guard lock(sessions_mutex_);
  sessions_[key] = SessionEntry{handle, std::chrono::steady_clock::now()};
  return handle;
}

void Service::drop_session(const std::string& user_id, const std::string& course_id,
                           bool release) {
  std::optional<prover::SessionHandle> handle;
  {
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find({user_id, course_id});
    if (it == sessions_.end()) return;
    handle = it->second.handle;
    sessions_.erase(it);
  }
  if (release && pool_->is_live(*handle)) pool_->release_session(*handle);
}

std::size_t Service::expire_idle_sessions() {
  std::vector<prover::SessionHandle> expired;
  auto cutoff = std::chrono::steady_clock::now() - config_.session_idle_timeout;
  {
    std::lock_guard lock(sessions_mutex_);
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      if (it->second.last_used <= cutoff) {
        expired.push_back(it->second.handle);
        it = sessions_.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (const prover::SessionHandle& h : expired) {
    if (pool_->is_live(h)) pool_->release_session(h);
  }
  return expired.size();
}

std::size_t Service::open_sessions() const {
  std::lock_guard lock(sessions_mutex_);
  return sessions_.size();
}

// ---- streaming --------------------------------------------------------

std::uint64_t Service::subscribe(const Principal& principal, Sink sink) {
  std::lock_guard lock(subscribers_mutex_);
  std::uint64_t id = next_subscription_++;
  subscribers_[id] = {principal.user_id, std::move(sink)};
  return id;
}

void Service::unsubscribe(std::uint64_t subscription) {
  std::lock_guard lock(subscribers_mutex_);
  subscribers_.erase(subscription);
}

void Service::deliver(const std::string& user_id, const json& message) {
  std::string text = message.dump();
  std::vector<Sink> sinks;
  {
    std::lock_guard lock(subscribers_mutex_);
    for (const auto& [id, entry] : subscribers_) {
      if (entry.first == user_id) sinks.push_back(entry.second);
    }
  }
  for (const Sink& sink : sinks) sink(text);
}

std::string Service::handle_stream_message(const Principal& principal, std::string_view text) {
  try {
    json message = json::parse(text);
    if (!message.is_object()) throw Error(Errc::invalid_argument, "frame must be an object");
    std::string type = message.value("type", "");
    if (type != "check") throw Error(Errc::invalid_argument, "unknown frame type '" + type + "'");
    std::string request_id = enqueue_check(principal, message);
    return json{{"type", "notice"},
                {"request_id", request_id},
                {"payload", {{"state", "pending"}}}}
        .dump();
  } catch (const Error& e) {
    return json{{"type", "error"}, {"payload", error_body(errc_name(e.code()), e.what())}}.dump();
  } catch (const json::exception& e) {
    return json{{"type", "error"},
                {"payload", error_body(errc_name(Errc::invalid_argument), e.what())}}
        .dump();
  }
}

// ---- editor support ---------------------------------------------------

HttpResponse Service::get_rules(const Principal& p, const std::map<std::string, std::string>& q) {
  const syntax::SyntaxProfile* profile = nullptr;
  std::string course_id = param(q, "course");
  if (!course_id.empty()) {
    auto c = store_->course(course_id);
    if (!c) throw Error(Errc::not_found, "no course '" + course_id + "'");
    if (!may_access_course(p, *c)) throw Error(Errc::forbidden, "not enrolled in this course");
    if (!c->profile.empty()) profile = syntax::find_bundled_profile(c->profile);
  }
  static const syntax::SyntaxProfile permissive = syntax::permissive_profile();
  std::vector<feedback::RuleEntry> listed =
      feedback::list_rules(rules_, profile != nullptr ? *profile : permissive, param(q, "category"));
  std::string query = param(q, "q");
  if (!query.empty()) {
    std::vector<feedback::RuleEntry> matched = feedback::search_rules(rules_, query);
    std::erase_if(listed, [&](const feedback::RuleEntry& e) {
      return std::find(matched.begin(), matched.end(), e) == matched.end();
    });
  }
  std::string locale = param(q, "locale");
  if (locale != "en" && locale != "de") locale = config_.locale_default;
  json out = json::array();
  for (const feedback::RuleEntry& e : listed) {
    out.push_back({{"display", e.display_name},
                   {"prover", e.prover_name},
                   {"schema", e.schema},
                   {"category", e.category},
                   {"description", e.describe(locale)}});
  }
  return reply(200, {{"rules", out}});
}

HttpResponse Service::get_symbols(const std::map<std::string, std::string>& q) {
  json out = json::array();
  for (const syntax::SymbolEntry& s : syntax::lookup_symbol(param(q, "q"))) {
    json entry = {{"name", s.name}, {"glyph", s.glyph}, {"escape", s.escape}};
    if (s.abbreviation) entry["abbreviation"] = *s.abbreviation;
    out.push_back(std::move(entry));
  }
  return reply(200, {{"symbols", out}});
}

HttpResponse Service::post_tokenize(const json& body) {
  const std::string& text = required_string(body, "text");
  if (!utf8::is_valid(text)) throw Error(Errc::invalid_argument, "text is not valid UTF-8");
  json tokens = json::array();
  for (const syntax::Token& tok : syntax::tokenize(text)) {
    tokens.push_back({{"kind", syntax::to_string(tok.kind)},
                      {"start", tok.span.start},
                      {"end", tok.span.end}});
  }
  return reply(200, {{"tokens", tokens}});
}

HttpResponse Service::post_complete(const Principal& p, const json& body) {
  const std::string& text = required_string(body, "text");
  if (!utf8::is_valid(text)) throw Error(Errc::invalid_argument, "text is not valid UTF-8");
  auto cursor_it = body.find("cursor");
  if (cursor_it == body.end() || !cursor_it->is_number_unsigned()) {
    throw Error(Errc::invalid_argument, "field 'cursor' must be a byte offset");
  }
  std::size_t cursor = cursor_it->get<std::size_t>();
  if (cursor > text.size()) throw Error(Errc::out_of_range, "cursor past the end of the text");

  static const syntax::SyntaxProfile permissive = syntax::permissive_profile();
  const syntax::SyntaxProfile* profile = &permissive;
  if (auto course_id = optional_string(body, "course_id")) {
    auto c = store_->course(*course_id);
    if (!c) throw Error(Errc::not_found, "no course '" + *course_id + "'");
    if (!may_access_course(p, *c)) throw Error(Errc::forbidden, "not enrolled in this course");
    if (const syntax::SyntaxProfile* found = syntax::find_bundled_profile(c->profile)) {
      profile = found;
    }
  }
  json out = json::array();
  for (const syntax::Completion& c :
       syntax::complete(text, cursor, *profile, feedback::list_rules(rules_, *profile))) {
    out.push_back({{"start", c.replace.start},
                   {"end", c.replace.end},
                   {"insert", c.insert},
                   {"kind", syntax::to_string(c.kind)},
                   {"label", c.label}});
  }
  return reply(200, {{"completions", out}});
}

// ---- administration ---------------------------------------------------

HttpResponse Service::get_pool() {
  prover::PoolStatus status = pool_->status();
  auto iso = [](std::chrono::system_clock::time_point tp) {
    return store::format_timestamp(
        std::chrono::duration_cast<std::chrono::milliseconds>(tp.time_since_epoch()).count());
  };
  json instances = json::array();
  for (const prover::InstanceStatus& s : status.instances) {
    instances.push_back(
        {{"id", s.id},
         {"endpoint", s.endpoint.host + ":" + std::to_string(s.endpoint.port)},
         {"state", prover::to_string(s.state)},
         {"active_sessions", s.active_sessions},
         {"started_at", iso(s.started_at)},
         {"last_heartbeat", s.last_heartbeat ? json(iso(*s.last_heartbeat)) : json(nullptr)},
         {"missed_heartbeats", s.missed_heartbeats},
         {"acquisitions", s.acquisitions}});
  }
  return reply(200, {{"target", pool_->target()},
                     {"max", pool_->config().max},
                     {"degraded", status.degraded},
                     {"healthy", status.count(prover::InstanceState::healthy)},
                     {"instances", std::move(instances)}});
}

HttpResponse Service::post_scale(const json& body) {
  auto it = body.find("target");
  if (it == body.end() || !it->is_number_integer()) {
    throw Error(Errc::invalid_argument, "field 'target' must be an integer");
  }
  pool_->scale(it->get<int>());
  return get_pool();
}

HttpResponse Service::delete_user(const std::string& id) {
  history_.delete_user(id);
  std::vector<std::string> courses_of_user;
  {
    std::lock_guard lock(sessions_mutex_);
    for (const auto& [key, entry] : sessions_) {
      if (key.first == id) courses_of_user.push_back(key.second);
    }
  }
  for (const std::string& course : courses_of_user) drop_session(id, course, true);
  spdlog::info("deleted profile of user {}", id);
  return HttpResponse{204, "", "application/json"};
}

HttpResponse Service::get_export(const std::map<std::string, std::string>& q) {
  store::ExportFilter filter;
  if (std::string c = param(q, "course"); !c.empty()) filter.course_id = c;
  if (std::string t = param(q, "tutorial"); !t.empty()) filter.tutorial_id = t;
  filter.from = millis_param(q, "from");
  filter.to = millis_param(q, "to");
  return HttpResponse{200, history_.export_ndjson(filter), "application/x-ndjson"};
}

}  // namespace pb::api
