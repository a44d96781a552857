#pragma once

// Line-delimited JSON wire protocol between the gateway and prover servers.
// Every message is one UTF-8 JSON object followed by '\n'. The grammar is
// documented in docs/prover-protocol.md.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prover/result.hpp"

namespace pb::prover::protocol {

enum class Command { ping, session_start, use_theories, session_stop };
enum class ReplyKind { ok, error, note, finished };

std::string_view to_string(Command command) noexcept;
std::string_view to_string(ReplyKind kind) noexcept;

struct Request {
  Command command = Command::ping;
  std::uint64_t id = 0;
  std::string parent;       // session_start
  std::string session_id;   // use_theories, session_stop
  std::string theory_text;  // use_theories
};

struct Reply {
  ReplyKind kind = ReplyKind::ok;
  std::optional<std::uint64_t> id;  // absent when the request was unreadable
  std::string session_id;           // ok to session_start
  std::string message;              // error
  std::string status;               // finished: "ok" | "failed"
  std::vector<ProverMessage> messages;
  std::vector<ProofState> states;
};

// Encoders return the line including the trailing '\n'.
std::string encode(const Request& request);
std::string encode(const Reply& reply);

// Throw pb::Error(protocol_error) on malformed input.
Request decode_request(std::string_view line);
Reply decode_reply(std::string_view line);

}  // namespace pb::prover::protocol
