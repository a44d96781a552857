#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace pb::net {

using Millis = std::chrono::milliseconds;
inline constexpr Millis kForever{-1};

// Owning file descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void close();
  // Wakes up threads blocked on this socket without releasing the fd.
  void shutdown();

 private:
  int fd_ = -1;
};

enum class ReadStatus { line, timeout, closed };

struct ReadResult {
  ReadStatus status;
  std::string line;  // without the terminating '\n'
};

class TcpStream {
 public:
  TcpStream() = default;
  explicit TcpStream(Socket socket) : socket_(std::move(socket)) {}

  // Throws pb::Error(io_error) or pb::Error(timeout).
  static TcpStream connect(const std::string& host, std::uint16_t port,
                           Millis timeout);

  // Throws pb::Error(io_error).
  void write_all(std::string_view data);
  ReadResult read_line(Millis timeout = kForever);

  void shutdown() { socket_.shutdown(); }
  bool valid() const { return socket_.valid(); }

 private:
  Socket socket_;
  std::string buffer_;
};

class TcpListener {
 public:
  // Port 0 picks an ephemeral port. Throws pb::Error(io_error).
  static TcpListener bind(const std::string& host, std::uint16_t port);

  std::uint16_t port() const { return port_; }
  // Blocks; returns nullopt once the listener has been shut down.
  std::optional<TcpStream> accept();
  void shutdown() { socket_.shutdown(); }

 private:
  Socket socket_;
  std::uint16_t port_ = 0;
};

}  // namespace pb::net
