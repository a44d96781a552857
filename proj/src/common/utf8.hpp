#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace pb::utf8 {

struct Decoded {
  char32_t code_point = 0;
  std::size_t length = 0;  // 0 means the bytes at the position are not valid UTF-8
};

// Decodes the code point starting at `pos`. Rejects overlong forms,
// surrogates and values above U+10FFFF.
Decoded decode(std::string_view text, std::size_t pos) noexcept;

bool is_valid(std::string_view text) noexcept;

// True when `pos` is 0, the text length, or the first byte of a code point.
bool is_boundary(std::string_view text, std::size_t pos) noexcept;

void append(std::string& out, char32_t code_point);
std::string encode(char32_t code_point);

// Splits valid UTF-8 into code points. Invalid bytes are mapped one-to-one
// onto U+FFFD so that the result is total.
std::u32string to_code_points(std::string_view text);
std::string from_code_points(std::u32string_view points);

std::string ascii_lower(std::string_view text);

}  // namespace pb::utf8
