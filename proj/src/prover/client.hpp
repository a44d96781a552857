#pragma once

#include <cstdint>
#include <string>

#include "prover/protocol.hpp"
#include "prover/result.hpp"
#include "prover/socket.hpp"

namespace pb::prover {

// One TCP connection to a prover server. Not thread-safe; requests on one
// connection are strictly sequential.
class ProverConnection {
 public:
  // Throws pb::Error(io_error | timeout).
  static ProverConnection connect(const std::string& host, std::uint16_t port,
                                  net::Millis timeout);

  // True when an ok reply arrives in time.
  bool ping(net::Millis timeout);
  // Throws pb::Error(timeout | protocol_error | io_error).
  std::string session_start(const std::string& parent, net::Millis timeout);
  void session_stop(const std::string& session_id, net::Millis timeout);
  // Collects note messages until the terminal reply. Timeouts and protocol
  // failures come back as the corresponding result status, never thrown.
  ProverResult use_theories(const std::string& session_id,
                            const std::string& theory_text, net::Millis timeout);

  void close() { stream_.shutdown(); }

 private:
  explicit ProverConnection(net::TcpStream stream) : stream_(std::move(stream)) {}
  std::uint64_t send(protocol::Request request);
  // Next reply for `id`; replies to other ids are discarded.
  protocol::Reply await(std::uint64_t id,
                        std::chrono::steady_clock::time_point deadline);

  net::TcpStream stream_;
  std::uint64_t next_id_ = 1;
};

}  // namespace pb::prover
