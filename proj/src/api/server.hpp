#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "api/service.hpp"

namespace pb::api {

// HTTP/1.1 and WebSocket front end for a Service. Requests are served on a
// small pool of I/O threads; /v1/stream upgrades to a WebSocket that
// carries check results for the authenticated user.
class HttpServer {
 public:
  HttpServer(Service& service, std::string host, std::uint16_t port, int threads = 4,
             std::size_t body_limit = 1 << 20);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and starts serving. Port 0 picks a free port. Throws
  // pb::Error(io_error).
  void start();
  void stop();
  std::uint16_t port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pb::api
