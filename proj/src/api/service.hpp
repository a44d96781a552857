#pragma once

#include <boost/asio/strand.hpp>
#include <boost/asio/thread_pool.hpp>

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "api/jwt.hpp"
#include "feedback/hints.hpp"
#include "feedback/rules.hpp"
#include "json.hpp"
#include "prover/pool.hpp"
#include "store/history.hpp"
#include "store/store.hpp"
#include "syntax/profile.hpp"
#include "tutorial/tutorial.hpp"

namespace pb::api {

enum class Role { student = 1, teacher = 2, admin = 3 };
std::string_view to_string(Role role) noexcept;

struct Principal {
  std::string user_id;
  std::set<Role> roles;
  std::string issuer;

  bool has(Role role) const;  // admin implies teacher implies student
};

struct ServiceConfig {
  std::string locale_default = "en";
  // Issuer recorded for users enrolled by username before their first login.
  std::string default_issuer;
  std::chrono::milliseconds session_idle_timeout{10 * 60 * 1000};
  // Tasks after the first failed one stay unchecked instead of being
  // credited on their own.
  bool gate_after_failed_task = false;
  std::size_t check_workers = 4;
  std::size_t max_body_bytes = 1 << 20;
  // Clock for token expiry; tests pin it.
  std::function<std::int64_t()> now_seconds;
};

struct HttpRequest {
  std::string method;
  std::string target;         // path plus optional query
  std::string authorization;  // raw header value
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// One endpoint of the /v1 surface with the least role that may call it.
struct Endpoint {
  std::string method;
  std::string path;  // with "{id}" placeholders
  Role minimum;
};
const std::vector<Endpoint>& endpoints();

// Transport-independent web server core. Handlers are safe to call from
// many threads; checks run asynchronously on worker threads, serialized per
// user, and are delivered by polling or to stream subscribers.
class Service {
 public:
  Service(ServiceConfig config, TokenVerifier verifier,
          std::shared_ptr<store::Store> store, std::shared_ptr<prover::Pool> pool);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  HttpResponse handle(const HttpRequest& request);

  // Authorization header value ("Bearer ...") or a bare token. Throws
  // pb::Error(unauthenticated | forbidden).
  Principal authenticate(std::string_view credentials);

  using Sink = std::function<void(const std::string& message)>;
  // Stream messages for this user go to `sink` until unsubscribed.
  std::uint64_t subscribe(const Principal& principal, Sink sink);
  void unsubscribe(std::uint64_t subscription);
  // Inbound stream frame; the reply frame is returned (acks and errors).
  std::string handle_stream_message(const Principal& principal, std::string_view text);

  // Stores a tutorial source without a principal (startup seeding). Throws
  // pb::Error with the loader's message, or invariant_violation when the
  // tutorial fails validation.
  void seed_tutorial(std::string_view source);

  // Releases prover sessions idle for longer than the configured timeout.
  std::size_t expire_idle_sessions();
  std::size_t open_sessions() const;
  // Blocks until no check is queued or running.
  void wait_idle();

  store::History& history() { return history_; }
  prover::Pool& pool() { return *pool_; }

 private:
  struct CheckJob;
  struct UserLane;
  struct SessionEntry {
    prover::SessionHandle handle;
    std::chrono::steady_clock::time_point last_used;
  };

  HttpResponse dispatch(const Principal& principal, const std::string& method,
                        const std::vector<std::string>& segments,
                        const std::map<std::string, std::string>& query,
                        const std::string& body);

  HttpResponse get_courses(const Principal& p);
  HttpResponse post_courses(const Principal& p, const nlohmann::json& body);
  HttpResponse get_tutorial(const Principal& p, const std::string& id,
                            const std::string& locale);
  HttpResponse post_tutorial(const Principal& p, const nlohmann::json& body);
  HttpResponse post_check(const Principal& p, const nlohmann::json& body);
  HttpResponse get_check(const Principal& p, const std::string& id);
  HttpResponse post_reset(const Principal& p, const std::string& tutorial_id);
  HttpResponse get_rules(const Principal& p, const std::map<std::string, std::string>& q);
  HttpResponse get_symbols(const std::map<std::string, std::string>& q);
  HttpResponse post_tokenize(const nlohmann::json& body);
  HttpResponse post_complete(const Principal& p, const nlohmann::json& body);
  HttpResponse get_pool();
  HttpResponse post_scale(const nlohmann::json& body);
  HttpResponse delete_user(const std::string& id);
  HttpResponse get_export(const std::map<std::string, std::string>& q);

  // Validates and enqueues; returns the request id.
  std::string enqueue_check(const Principal& p, const nlohmann::json& body);
  nlohmann::json run_check(const CheckJob& job);
  void deliver(const std::string& user_id, const nlohmann::json& message);

  std::shared_ptr<const tutorial::Tutorial> tutorial(const std::string& id);
  // The course's profile, else the tutorial's own.
  const syntax::SyntaxProfile& profile_for(const store::Course* course,
                                           const tutorial::Tutorial& t) const;
  bool may_access_course(const Principal& p, const store::Course& course) const;
  // Course of `tutorial_id` the principal may use, preferring `course_id`.
  std::optional<store::Course> course_for(const Principal& p, const std::string& tutorial_id,
                                          const std::string& course_id);
  tutorial::TutorialState load_state(const std::string& user_id,
                                     const tutorial::Tutorial& t);
  std::string resolve_user(const std::string& username);
  void resize_pool();

  prover::SessionHandle session_for(const std::string& user_id, const std::string& course_id);
  void drop_session(const std::string& user_id, const std::string& course_id, bool release);
  std::shared_ptr<UserLane> lane(const std::string& user_id);

  ServiceConfig config_;
  TokenVerifier verifier_;
  std::shared_ptr<store::Store> store_;
  std::shared_ptr<prover::Pool> pool_;
  store::History history_;
  const feedback::RuleCatalog& rules_;
  const feedback::HintCatalog& hints_;
  std::string preamble_;

  std::mutex mutex_;  // courses, tutorials cache, identities
  std::map<std::string, std::shared_ptr<const tutorial::Tutorial>> tutorials_;

  std::mutex checks_mutex_;
  std::condition_variable checks_cv_;
  std::map<std::string, nlohmann::json> checks_;  // "user\nrequest" -> record
  std::size_t in_flight_ = 0;
  std::uint64_t next_request_ = 1;

  mutable std::mutex sessions_mutex_;
  std::map<std::pair<std::string, std::string>, SessionEntry> sessions_;

  std::mutex subscribers_mutex_;
  std::map<std::uint64_t, std::pair<std::string, Sink>> subscribers_;
  std::uint64_t next_subscription_ = 1;

  std::mutex lanes_mutex_;
  std::map<std::string, std::shared_ptr<UserLane>> lanes_;
  boost::asio::thread_pool workers_;
};

}  // namespace pb::api
