#include "common/error.hpp"

namespace pb {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::ok: return "ok";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::format_error: return "format-error";
    case Errc::invariant_violation: return "invariant-violation";
    case Errc::mismatch: return "mismatch";
    case Errc::out_of_range: return "out-of-range";
    case Errc::not_found: return "not-found";
    case Errc::unknown_user: return "unknown-user";
    case Errc::no_healthy_instance: return "no-healthy-instance";
    case Errc::all_at_capacity: return "pool-exhausted";
    case Errc::timeout: return "timeout";
    case Errc::protocol_error: return "protocol-error";
    case Errc::unauthenticated: return "unauthenticated";
    case Errc::forbidden: return "forbidden";
    case Errc::storage_failure: return "storage-failure";
    case Errc::io_error: return "io-error";
    case Errc::internal: return "internal";
  }
  return "unknown";
}

}  // namespace pb
