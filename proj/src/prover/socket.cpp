#include "prover/socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "common/error.hpp"

namespace pb::net {
namespace {

constexpr std::size_t kMaxLine = 64 * 1024 * 1024;

[[noreturn]] void io_fail(const std::string& what) {
  throw Error(Errc::io_error, what + ": " + std::strerror(errno));
}

int poll_one(int fd, short events, Millis timeout) {
  pollfd p{fd, events, 0};
  while (true) {
    int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc >= 0 || errno != EINTR) return rc;
  }
}

}  // namespace

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

TcpStream TcpStream::connect(const std::string& host, std::uint16_t port,
                             Millis timeout) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  std::string service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw Error(Errc::io_error, "cannot resolve " + host + ": " + gai_strerror(rc));
  }
  Socket sock(::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, 0));
  if (!sock.valid()) {
    ::freeaddrinfo(res);
    io_fail("socket");
  }
  int flags = ::fcntl(sock.fd(), F_GETFL, 0);
  ::fcntl(sock.fd(), F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(sock.fd(), res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0) {
    if (errno != EINPROGRESS) io_fail("connect to " + host + ":" + service);
    int ready = poll_one(sock.fd(), POLLOUT, timeout);
    if (ready == 0) {
      throw Error(Errc::timeout, "connect to " + host + ":" + service + " timed out");
    }
    int err = 0;
    socklen_t len = sizeof(err);
    ::getsockopt(sock.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (ready < 0 || err != 0) {
      errno = err;
      io_fail("connect to " + host + ":" + service);
    }
  }
  ::fcntl(sock.fd(), F_SETFL, flags);
  int one = 1;
  ::setsockopt(sock.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return TcpStream(std::move(sock));
}

void TcpStream::write_all(std::string_view data) {
  while (!data.empty()) {
    ssize_t n = ::send(socket_.fd(), data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      io_fail("send");
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

ReadResult TcpStream::read_line(Millis timeout) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    if (std::size_t nl = buffer_.find('\n'); nl != std::string::npos) {
      ReadResult r{ReadStatus::line, buffer_.substr(0, nl)};
      buffer_.erase(0, nl + 1);
      return r;
    }
    if (buffer_.size() > kMaxLine) {
      throw Error(Errc::protocol_error, "line exceeds maximum length");
    }
    Millis wait = kForever;
    if (timeout.count() >= 0) {
      wait = std::chrono::duration_cast<Millis>(deadline -
                                                std::chrono::steady_clock::now());
      if (wait.count() <= 0) return {ReadStatus::timeout, {}};
    }
    int ready = poll_one(socket_.fd(), POLLIN, wait);
    if (ready == 0) return {ReadStatus::timeout, {}};
    if (ready < 0) io_fail("poll");
    char chunk[8192];
    ssize_t n = ::recv(socket_.fd(), chunk, sizeof(chunk), 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == ECONNRESET) return {ReadStatus::closed, {}};
      io_fail("recv");
    }
    if (n == 0) return {ReadStatus::closed, {}};
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

TcpListener TcpListener::bind(const std::string& host, std::uint16_t port) {
  TcpListener listener;
  listener.socket_ = Socket(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!listener.socket_.valid()) io_fail("socket");
  int one = 1;
  ::setsockopt(listener.socket_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw Error(Errc::invalid_argument, "invalid IPv4 address '" + host + "'");
  }
  if (::bind(listener.socket_.fd(), reinterpret_cast<sockaddr*>(&addr),
             sizeof(addr)) != 0) {
    io_fail("bind " + host + ":" + std::to_string(port));
  }
  if (::listen(listener.socket_.fd(), 512) != 0) io_fail("listen");
  socklen_t len = sizeof(addr);
  ::getsockname(listener.socket_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  listener.port_ = ntohs(addr.sin_port);
  return listener;
}

std::optional<TcpStream> TcpListener::accept() {
  while (true) {
    int fd = ::accept4(socket_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
    if (fd >= 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return TcpStream(Socket(fd));
    }
    if (errno == EINTR || errno == ECONNABORTED) continue;
    return std::nullopt;
  }
}

}  // namespace pb::net
