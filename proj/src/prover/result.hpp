#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "syntax/span.hpp"

namespace pb::prover {

using syntax::SourceSpan;

enum class MessageSeverity { error, warning, information };
enum class ResultStatus { finished_ok, finished_failed, protocol_error, timeout };

std::string_view to_string(MessageSeverity severity) noexcept;
std::string_view to_string(ResultStatus status) noexcept;
MessageSeverity message_severity_from_string(std::string_view name);

struct ProverMessage {
  MessageSeverity severity = MessageSeverity::error;
  SourceSpan span;  // offsets into the submitted theory text
  std::string text;

  friend bool operator==(const ProverMessage&, const ProverMessage&) = default;
};

struct ProofState {
  std::size_t position = 0;
  std::string text;
  int open_subgoals = 0;

  friend bool operator==(const ProofState&, const ProofState&) = default;
};

struct ProverResult {
  ResultStatus status = ResultStatus::finished_ok;
  std::vector<ProverMessage> messages;
  std::vector<ProofState> states;

  std::size_t error_count() const;
  // finished-ok implies no error messages
  bool consistent() const;
};

}  // namespace pb::prover
