#include "prover/client.hpp"

#include "common/error.hpp"

namespace pb::prover {

using Clock = std::chrono::steady_clock;

ProverConnection ProverConnection::connect(const std::string& host,
                                           std::uint16_t port,
                                           net::Millis timeout) {
  return ProverConnection(net::TcpStream::connect(host, port, timeout));
}

std::uint64_t ProverConnection::send(protocol::Request request) {
  request.id = next_id_++;
  stream_.write_all(protocol::encode(request));
  return request.id;
}

protocol::Reply ProverConnection::await(std::uint64_t id, Clock::time_point deadline) {
  while (true) {
    auto left = std::chrono::duration_cast<net::Millis>(deadline - Clock::now());
    if (left.count() <= 0) throw Error(Errc::timeout, "prover did not answer in time");
    net::ReadResult read = stream_.read_line(left);
    if (read.status == net::ReadStatus::timeout) {
      throw Error(Errc::timeout, "prover did not answer in time");
    }
    if (read.status == net::ReadStatus::closed) {
      throw Error(Errc::protocol_error, "prover closed the connection");
    }
    protocol::Reply reply = protocol::decode_reply(read.line);
    if (reply.id && *reply.id != id) continue;
    return reply;
  }
}

bool ProverConnection::ping(net::Millis timeout) {
  try {
    protocol::Request r;
    r.command = protocol::Command::ping;
    std::uint64_t id = send(r);
    return await(id, Clock::now() + timeout).kind == protocol::ReplyKind::ok;
  } catch (const Error&) {
    return false;
  }
}

std::string ProverConnection::session_start(const std::string& parent,
                                            net::Millis timeout) {
  protocol::Request r;
  r.command = protocol::Command::session_start;
  r.parent = parent;
  std::uint64_t id = send(r);
  protocol::Reply reply = await(id, Clock::now() + timeout);
  if (reply.kind != protocol::ReplyKind::ok || reply.session_id.empty()) {
    throw Error(Errc::protocol_error, "session_start failed: " + reply.message);
  }
  return reply.session_id;
}

void ProverConnection::session_stop(const std::string& session_id,
                                    net::Millis timeout) {
  protocol::Request r;
  r.command = protocol::Command::session_stop;
  r.session_id = session_id;
  std::uint64_t id = send(r);
  protocol::Reply reply = await(id, Clock::now() + timeout);
  if (reply.kind != protocol::ReplyKind::ok) {
    throw Error(Errc::protocol_error, "session_stop failed: " + reply.message);
  }
}

ProverResult ProverConnection::use_theories(const std::string& session_id,
                                            const std::string& theory_text,
                                            net::Millis timeout) {
  ProverResult result;
  auto fail = [&](ResultStatus status, const std::string& text) {
    result.status = status;
    result.states.clear();
    result.messages.push_back({MessageSeverity::error, SourceSpan{0, 0}, text});
    return result;
  };
  Clock::time_point deadline = Clock::now() + timeout;
  try {
    protocol::Request r;
    r.command = protocol::Command::use_theories;
    r.session_id = session_id;
    r.theory_text = theory_text;
    std::uint64_t id = send(r);
    while (true) {
      protocol::Reply reply = await(id, deadline);
      switch (reply.kind) {
        case protocol::ReplyKind::note:
          for (auto& m : reply.messages) result.messages.push_back(std::move(m));
          break;
        case protocol::ReplyKind::finished:
          for (auto& m : reply.messages) result.messages.push_back(std::move(m));
          result.states = std::move(reply.states);
          result.status = reply.status == "ok" ? ResultStatus::finished_ok
                                               : ResultStatus::finished_failed;
          for (const ProverMessage& m : result.messages) {
            if (m.span.end > theory_text.size()) {
              return fail(ResultStatus::protocol_error,
                          "prover reported a span outside the theory");
            }
          }
          if (!result.consistent()) {
            return fail(ResultStatus::protocol_error,
                        "prover reported ok together with errors");
          }
          return result;
        case protocol::ReplyKind::error:
          return fail(ResultStatus::protocol_error, "prover error: " + reply.message);
        case protocol::ReplyKind::ok:
          return fail(ResultStatus::protocol_error, "unexpected 'ok' reply");
      }
    }
  } catch (const Error& e) {
    if (e.code() == Errc::timeout) return fail(ResultStatus::timeout, e.what());
    return fail(ResultStatus::protocol_error, e.what());
  }
}

}  // namespace pb::prover
