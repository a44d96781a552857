#pragma once

#include <cstddef>
#include <string_view>

namespace pb::syntax {

// Half-open byte range [start, end) into a UTF-8 document.
struct SourceSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  constexpr std::size_t length() const { return end - start; }
  constexpr bool empty() const { return start == end; }
  constexpr bool contains(const SourceSpan& other) const {
    return start <= other.start && other.end <= end;
  }

  friend constexpr bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

// Checks ordering, bounds and UTF-8 character boundaries.
bool is_valid_span(const SourceSpan& span, std::string_view document) noexcept;

}  // namespace pb::syntax
