#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "api/jwt.hpp"
#include "api/server.hpp"
#include "api/service.hpp"
#include "prover/pool.hpp"
#include "store/store.hpp"

namespace pb::api {

enum class ProverMode { structural, fixture, external };

struct AppConfig {
  std::string listen_host = "127.0.0.1";
  std::uint16_t listen_port = 8080;
  int http_threads = 4;
  AuthConfig auth;
  prover::PoolConfig pool;
  ProverMode prover_mode = ProverMode::structural;
  std::string fixtures_path;     // fixture mode
  std::string prover_endpoints;  // external mode, "host:port,..."
  std::string data_dir;          // empty: in-memory store
  std::string tutorials_dir;     // *.toml seeded at startup
  std::string locale_default = "en";
  std::chrono::milliseconds session_idle_timeout{10 * 60 * 1000};
  bool gate_after_failed_task = false;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string& name)>;

// Reads PB_* variables (README.md lists them). Key files named by
// PB_ISSUER_KEY_FILE are read here. Throws pb::Error(invalid_argument |
// io_error).
AppConfig config_from_env(const EnvLookup& lookup);
EnvLookup process_env();

// The assembled server: store, prover pool, service and HTTP front end.
class Application {
 public:
  // Throws pb::Error when a component cannot be built.
  explicit Application(AppConfig config);
  ~Application();
  Application(const Application&) = delete;
  Application& operator=(const Application&) = delete;

  void start();
  void stop();
  // Blocks until stop() is called from another thread.
  void wait();
  std::uint16_t port() const;

  Service& service() { return *service_; }
  prover::Pool& pool() { return *pool_; }

 private:
  AppConfig config_;
  std::shared_ptr<store::Store> store_;
  std::shared_ptr<prover::Pool> pool_;
  std::unique_ptr<Service> service_;
  std::unique_ptr<HttpServer> server_;

  std::mutex mutex_;
  std::condition_variable cv_;
  bool stopping_ = false;
  std::thread sweeper_;
};

}  // namespace pb::api
