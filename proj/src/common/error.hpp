#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pb {

// Error conditions shared by every module. The numeric values are part of
// the C API (see proofbuddy.h) and must stay in sync with pb_status.
enum class Errc : int {
  ok = 0,
  invalid_argument = 1,
  format_error = 2,
  invariant_violation = 3,
  mismatch = 4,
  out_of_range = 5,
  not_found = 6,
  unknown_user = 7,
  no_healthy_instance = 8,
  all_at_capacity = 9,
  timeout = 10,
  protocol_error = 11,
  unauthenticated = 12,
  forbidden = 13,
  storage_failure = 14,
  io_error = 15,
  internal = 16,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace pb
