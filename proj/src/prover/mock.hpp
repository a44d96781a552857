#pragma once

#include <atomic>
#include <condition_variable>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "prover/protocol.hpp"
#include "prover/result.hpp"
#include "prover/socket.hpp"

namespace pb::prover {

// "fnv1a64:" followed by 16 lowercase hex digits of the FNV-1a hash of the
// theory's UTF-8 bytes.
std::string theory_hash(std::string_view theory);

// Deterministic structural checks standing in for a prover (rules in
// docs/prover-protocol.md): outer-syntax errors, theory/end framing,
// balanced goals and proof/qed blocks, disabled automated methods, and a
// synthetic proof state after every command inside a proof.
ProverResult structural_check(std::string_view theory);

const std::vector<std::string_view>& automated_methods();

// Canned responses keyed by theory hash, loaded from a JSON fixture file.
class FixtureSet {
 public:
  // Throws pb::Error(format_error).
  static FixtureSet parse(std::string_view json_text);
  static FixtureSet load_file(const std::string& path);

  const ProverResult* find(std::string_view hash) const;
  bool fallback_structural() const { return fallback_structural_; }
  std::size_t size() const { return results_.size(); }

 private:
  std::map<std::string, ProverResult, std::less<>> results_;
  bool fallback_structural_ = false;
};

enum class MockMode { fixture, structural };

struct MockOptions {
  MockMode mode = MockMode::structural;
  std::shared_ptr<const FixtureSet> fixtures;
  // Stop replying after this many requests (chaos hook).
  std::optional<std::uint64_t> fail_after;
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

// Result the mock reports for a theory in the given mode.
ProverResult mock_result(const MockOptions& options, std::string_view theory);

// In-process prover server speaking the wire protocol; one thread per
// connection.
class MockProverServer {
 public:
  explicit MockProverServer(MockOptions options);
  ~MockProverServer();
  MockProverServer(const MockProverServer&) = delete;
  MockProverServer& operator=(const MockProverServer&) = delete;

  void start();
  void stop();
  void wait();  // until stop() is called from another thread or a signal
  std::uint16_t port() const { return port_; }

  // Keep reading requests but never reply.
  void set_silent(bool silent) { silent_ = silent; }
  std::uint64_t requests_handled() const { return requests_; }
  std::size_t open_sessions() const;

 private:
  struct Connection {
    std::thread thread;
    std::shared_ptr<net::TcpStream> stream;
    std::atomic<bool> done{false};
  };

  void accept_loop();
  void serve(const std::shared_ptr<net::TcpStream>& stream);
  std::vector<protocol::Reply> respond(const protocol::Request& request);
  void reap_finished();

  MockOptions options_;
  net::TcpListener listener_;
  std::uint16_t port_ = 0;
  std::thread acceptor_;
  std::atomic<bool> running_{false};
  std::atomic<bool> silent_{false};
  std::atomic<std::uint64_t> requests_{0};

  mutable std::mutex mutex_;
  std::list<Connection> connections_;
  std::map<std::string, std::string> sessions_;  // id -> parent
  std::uint64_t next_session_ = 1;
  std::condition_variable stopped_cv_;
};

}  // namespace pb::prover
