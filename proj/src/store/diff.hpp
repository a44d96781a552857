#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace pb::store {

enum class OpKind { retain, insert, remove };

// Counts are in code points; `text` is set for inserts only.
struct EditOp {
  OpKind kind = OpKind::retain;
  std::size_t count = 0;
  std::string text;

  static EditOp retain(std::size_t n) { return {OpKind::retain, n, {}}; }
  static EditOp insert(std::string t) { return {OpKind::insert, 0, std::move(t)}; }
  static EditOp remove(std::size_t n) { return {OpKind::remove, n, {}}; }

  friend bool operator==(const EditOp&, const EditOp&) = default;
};

using EditScript = std::vector<EditOp>;

// Myers shortest edit script over code points after trimming the common
// prefix and suffix. Past a fixed edit distance the remaining middle is
// replaced wholesale, so scripts are always correct but only usually
// minimal. Adjacent ops of one kind are merged; no op is empty. Inputs must
// be valid UTF-8 (pb::Error(invalid_argument) otherwise).
EditScript edit_script(std::string_view from, std::string_view to);

// The script must consume `base` exactly; throws
// pb::Error(invariant_violation) otherwise.
std::string apply_script(std::string_view base, const EditScript& script);

}  // namespace pb::store
