#include "prover/result.hpp"

#include "common/error.hpp"

namespace pb::prover {

std::string_view to_string(MessageSeverity severity) noexcept {
  switch (severity) {
    case MessageSeverity::error: return "error";
    case MessageSeverity::warning: return "warning";
    case MessageSeverity::information: return "information";
  }
  return "error";
}

std::string_view to_string(ResultStatus status) noexcept {
  switch (status) {
    case ResultStatus::finished_ok: return "finished-ok";
    case ResultStatus::finished_failed: return "finished-failed";
    case ResultStatus::protocol_error: return "protocol-error";
    case ResultStatus::timeout: return "timeout";
  }
  return "protocol-error";
}

MessageSeverity message_severity_from_string(std::string_view name) {
  if (name == "error") return MessageSeverity::error;
  if (name == "warning") return MessageSeverity::warning;
  if (name == "information") return MessageSeverity::information;
  throw Error(Errc::protocol_error,
              "unknown message severity '" + std::string(name) + "'");
}

std::size_t ProverResult::error_count() const {
  std::size_t n = 0;
  for (const ProverMessage& m : messages) {
    if (m.severity == MessageSeverity::error) ++n;
  }
  return n;
}

bool ProverResult::consistent() const {
  return status != ResultStatus::finished_ok || error_count() == 0;
}

}  // namespace pb::prover
