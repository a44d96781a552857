#include "prover/mock.hpp"

#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "common/error.hpp"
#include "json.hpp"

namespace pb::prover {

using nlohmann::json;

FixtureSet FixtureSet::parse(std::string_view json_text) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(Errc::format_error, "fixture file is not a JSON object");
  }
  FixtureSet set;
  set.fallback_structural_ = doc.value("fallback", "none") == "structural";
  auto entries = doc.find("fixtures");
  if (entries == doc.end() || !entries->is_array()) {
    throw Error(Errc::format_error, "fixture file needs a 'fixtures' array");
  }
  for (const json& entry : *entries) {
    try {
      ProverResult r;
      std::string status = entry.at("status").get<std::string>();
      if (status != "ok" && status != "failed") {
        throw Error(Errc::format_error, "status must be 'ok' or 'failed'");
      }
      r.status = status == "ok" ? ResultStatus::finished_ok
                                : ResultStatus::finished_failed;
      for (const json& m : entry.value("messages", json::array())) {
        r.messages.push_back(
            {message_severity_from_string(m.at("kind").get<std::string>()),
             SourceSpan{m.at("start").get<std::size_t>(),
                        m.at("end").get<std::size_t>()},
             m.at("text").get<std::string>()});
      }
      for (const json& s : entry.value("states", json::array())) {
        r.states.push_back({s.at("pos").get<std::size_t>(),
                            s.at("text").get<std::string>(),
                            s.at("subgoals").get<int>()});
      }
      if (!r.consistent()) {
        throw Error(Errc::format_error, "status 'ok' with error messages");
      }
      set.results_[entry.at("hash").get<std::string>()] = std::move(r);
    } catch (const json::exception& e) {
      throw Error(Errc::format_error, std::string("bad fixture entry: ") + e.what());
    } catch (const Error& e) {
      throw Error(Errc::format_error, std::string("bad fixture entry: ") + e.what());
    }
  }
  return set;
}

FixtureSet FixtureSet::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open fixture file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const ProverResult* FixtureSet::find(std::string_view hash) const {
  auto it = results_.find(hash);
  return it == results_.end() ? nullptr : &it->second;
}

ProverResult mock_result(const MockOptions& options, std::string_view theory) {
  if (options.mode == MockMode::structural) return structural_check(theory);
  std::string hash = theory_hash(theory);
  if (options.fixtures) {
    if (const ProverResult* r = options.fixtures->find(hash)) return *r;
    if (options.fixtures->fallback_structural()) return structural_check(theory);
  }
  ProverResult miss;
  miss.status = ResultStatus::finished_failed;
  miss.messages.push_back({MessageSeverity::error, SourceSpan{0, 0},
                           "Mock prover: no fixture for theory " + hash});
  return miss;
}

MockProverServer::MockProverServer(MockOptions options)
    : options_(std::move(options)) {}

MockProverServer::~MockProverServer() { stop(); }

void MockProverServer::start() {
  listener_ = net::TcpListener::bind(options_.host, options_.port);
  port_ = listener_.port();
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void MockProverServer::stop() {
  if (!running_.exchange(false)) return;
  listener_.shutdown();
  if (acceptor_.joinable()) acceptor_.join();
  std::list<Connection> conns;
  {
    std::lock_guard lock(mutex_);
    conns.swap(connections_);
  }
  for (Connection& c : conns) c.stream->shutdown();
  for (Connection& c : conns) {
    if (c.thread.joinable()) c.thread.join();
  }
  { std::lock_guard lock(mutex_); }
  stopped_cv_.notify_all();
}

void MockProverServer::wait() {
  std::unique_lock lock(mutex_);
  stopped_cv_.wait(lock, [this] { return !running_; });
}

std::size_t MockProverServer::open_sessions() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

void MockProverServer::reap_finished() {
  std::lock_guard lock(mutex_);
  for (auto it = connections_.begin(); it != connections_.end();) {
    if (it->done) {
      if (it->thread.joinable()) it->thread.join();
      it = connections_.erase(it);
    } else {
      ++it;
    }
  }
}

void MockProverServer::accept_loop() {
  while (running_) {
    std::optional<net::TcpStream> accepted = listener_.accept();
    if (!accepted || !running_) break;
    reap_finished();
    auto stream = std::make_shared<net::TcpStream>(std::move(*accepted));
    std::lock_guard lock(mutex_);
    Connection& conn = connections_.emplace_back();
    conn.stream = stream;
    conn.thread = std::thread([this, stream, &conn] {
      serve(stream);
      conn.done = true;
    });
  }
}

void MockProverServer::serve(const std::shared_ptr<net::TcpStream>& stream) {
  try {
    while (running_) {
      net::ReadResult read = stream->read_line();
      if (read.status != net::ReadStatus::line) break;
      std::uint64_t n = ++requests_;
      if (silent_ || (options_.fail_after && n > *options_.fail_after)) continue;
      std::vector<protocol::Reply> replies;
      try {
        replies = respond(protocol::decode_request(read.line));
      } catch (const Error& e) {
        protocol::Reply r;
        r.kind = protocol::ReplyKind::error;
        r.message = e.what();
        replies.push_back(std::move(r));
      }
      std::string out;
      for (const protocol::Reply& r : replies) out += protocol::encode(r);
      stream->write_all(out);
    }
  } catch (const std::exception& e) {
    spdlog::debug("mock prover connection closed: {}", e.what());
  }
}

std::vector<protocol::Reply> MockProverServer::respond(
    const protocol::Request& request) {
  using protocol::Reply;
  using protocol::ReplyKind;
  Reply reply;
  reply.id = request.id;
  switch (request.command) {
    case protocol::Command::ping:
      reply.kind = ReplyKind::ok;
      return {reply};
    case protocol::Command::session_start: {
      std::lock_guard lock(mutex_);
      reply.kind = ReplyKind::ok;
      reply.session_id = "session-" + std::to_string(next_session_++);
      sessions_[reply.session_id] = request.parent;
      return {reply};
    }
    case protocol::Command::session_stop: {
      std::lock_guard lock(mutex_);
      if (sessions_.erase(request.session_id) == 0) {
        reply.kind = ReplyKind::error;
        reply.message = "unknown session " + request.session_id;
      } else {
        reply.kind = ReplyKind::ok;
      }
      return {reply};
    }
    case protocol::Command::use_theories: {
      {
        std::lock_guard lock(mutex_);
        if (!sessions_.contains(request.session_id)) {
          reply.kind = ReplyKind::error;
          reply.message = "unknown session " + request.session_id;
          return {reply};
        }
      }
      ProverResult result = mock_result(options_, request.theory_text);
      std::vector<Reply> replies;
      // one note per message, then the terminal reply with the states
      for (const ProverMessage& m : result.messages) {
        Reply note;
        note.kind = ReplyKind::note;
        note.id = request.id;
        note.messages.push_back(m);
        replies.push_back(std::move(note));
      }
      reply.kind = ReplyKind::finished;
      reply.status = result.status == ResultStatus::finished_ok ? "ok" : "failed";
      reply.states = std::move(result.states);
      replies.push_back(std::move(reply));
      return replies;
    }
  }
  return {};
}

}  // namespace pb::prover
