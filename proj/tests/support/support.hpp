#pragma once

// Helpers shared by the unit and acceptance tests.

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pb::test {

inline std::filesystem::path source_path(std::string_view relative) {
  return std::filesystem::path(PB_SOURCE_DIR) / relative;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::string read_source(std::string_view relative) {
  return read_file(source_path(relative));
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("pb-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

using Rng = std::mt19937_64;

inline std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[uniform(rng, 0, items.size() - 1)];
}

// Text drawn from an alphabet that mixes ASCII, multi-byte code points and
// newlines, so that code point and byte offsets differ.
inline std::string random_text(Rng& rng, std::size_t max_points) {
  static const std::vector<std::string> alphabet = {
      "a", "b", "c", " ", "\n", "x", "(", ")", "\"", "∧", "⟹", "α", "🙂", "é", "1"};
  std::string out;
  std::size_t n = uniform(rng, 0, max_points);
  for (std::size_t i = 0; i < n; ++i) out += pick(rng, alphabet);
  return out;
}

// Random edit of `text` at code point granularity: insert, delete or
// replace a short run.
inline std::string random_edit(Rng& rng, const std::string& text) {
  std::vector<std::string> points;
  for (std::size_t i = 0; i < text.size();) {
    std::size_t len = 1;
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (c >= 0xF0) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    points.push_back(text.substr(i, len));
    i += len;
  }
  std::size_t at = uniform(rng, 0, points.size());
  std::size_t del = at < points.size() ? uniform(rng, 0, std::min<std::size_t>(4, points.size() - at)) : 0;
  std::string insert = uniform(rng, 0, 3) == 0 ? "" : random_text(rng, 6);
  std::string out;
  for (std::size_t i = 0; i < at; ++i) out += points[i];
  out += insert;
  for (std::size_t i = at + del; i < points.size(); ++i) out += points[i];
  return out;
}

}  // namespace pb::test
