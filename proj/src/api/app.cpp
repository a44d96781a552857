#include "api/app.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "common/error.hpp"

namespace pb::api {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

int parse_int(const std::string& name, const std::string& value) {
  int out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw Error(Errc::invalid_argument, name + " must be an integer, got '" + value + "'");
  }
  return out;
}

}  // namespace

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* value = std::getenv(name.c_str());
    if (value == nullptr || *value == '\0') return std::nullopt;
    return std::string(value);
  };
}

AppConfig config_from_env(const EnvLookup& lookup) {
  AppConfig c;
  if (auto listen = lookup("PB_LISTEN_ADDR")) {
    std::size_t colon = listen->rfind(':');
    if (colon == std::string::npos) {
      throw Error(Errc::invalid_argument, "PB_LISTEN_ADDR must be host:port");
    }
    c.listen_host = listen->substr(0, colon);
    int port = parse_int("PB_LISTEN_ADDR port", listen->substr(colon + 1));
    if (port < 0 || port > 65535) throw Error(Errc::invalid_argument, "listen port out of range");
    c.listen_port = static_cast<std::uint16_t>(port);
  }
  if (auto threads = lookup("PB_HTTP_THREADS")) c.http_threads = parse_int("PB_HTTP_THREADS", *threads);

  auto issuer = lookup("PB_ISSUER_URL");
  auto key_file = lookup("PB_ISSUER_KEY_FILE");
  if (issuer.has_value() != key_file.has_value()) {
    throw Error(Errc::invalid_argument, "PB_ISSUER_URL and PB_ISSUER_KEY_FILE go together");
  }
  if (issuer) c.auth.issuers.push_back({*issuer, read_file(*key_file)});
  if (auto roles = lookup("PB_ROLES_CLAIM")) c.auth.roles_claim = *roles;

  if (auto v = lookup("PB_POOL_INITIAL")) c.pool.initial = parse_int("PB_POOL_INITIAL", *v);
  if (auto v = lookup("PB_POOL_MAX")) c.pool.max = parse_int("PB_POOL_MAX", *v);
  if (auto v = lookup("PB_SESSION_CAP")) c.pool.session_cap = parse_int("PB_SESSION_CAP", *v);
  if (auto v = lookup("PB_CHECK_TIMEOUT_MS")) {
    c.pool.check_timeout = std::chrono::milliseconds(parse_int("PB_CHECK_TIMEOUT_MS", *v));
  }
  c.pool.validate();

  std::string mode = lookup("PB_PROVER_MODE").value_or("structural");
  if (mode == "structural") {
    c.prover_mode = ProverMode::structural;
  } else if (mode == "fixture") {
    c.prover_mode = ProverMode::fixture;
    auto path = lookup("PB_PROVER_FIXTURES");
    if (!path) throw Error(Errc::invalid_argument, "fixture mode needs PB_PROVER_FIXTURES");
    c.fixtures_path = *path;
  } else if (mode == "external") {
    c.prover_mode = ProverMode::external;
    auto endpoints = lookup("PB_PROVER_ENDPOINTS");
    if (!endpoints) throw Error(Errc::invalid_argument, "external mode needs PB_PROVER_ENDPOINTS");
    c.prover_endpoints = *endpoints;
  } else {
    throw Error(Errc::invalid_argument,
                "PB_PROVER_MODE must be structural, fixture or external, got '" + mode + "'");
  }

  c.data_dir = lookup("PB_DATA_DIR").value_or("");
  c.tutorials_dir = lookup("PB_TUTORIALS_DIR").value_or("");
  c.locale_default = lookup("PB_LOCALE_DEFAULT").value_or("en");
  if (c.locale_default != "en" && c.locale_default != "de") {
    throw Error(Errc::invalid_argument, "PB_LOCALE_DEFAULT must be en or de");
  }
  if (auto v = lookup("PB_SESSION_IDLE_MS")) {
    c.session_idle_timeout = std::chrono::milliseconds(parse_int("PB_SESSION_IDLE_MS", *v));
  }
  if (auto v = lookup("PB_GATE_FAILED_TASKS")) {
    if (*v != "0" && *v != "1") throw Error(Errc::invalid_argument, "PB_GATE_FAILED_TASKS must be 0 or 1");
    c.gate_after_failed_task = *v == "1";
  }
  return c;
}

Application::Application(AppConfig config) : config_(std::move(config)) {
  if (config_.data_dir.empty()) {
    store_ = std::make_shared<store::MemoryStore>();
  } else {
    std::filesystem::create_directories(config_.data_dir);
    store_ = std::make_shared<store::SqliteStore>(
        (std::filesystem::path(config_.data_dir) / "proofbuddy.db").string());
  }

  std::shared_ptr<prover::Launcher> launcher;
  switch (config_.prover_mode) {
    case ProverMode::structural:
      launcher = std::make_shared<prover::InProcessLauncher>(prover::MockOptions{});
      break;
    case ProverMode::fixture: {
      prover::MockOptions options;
      options.mode = prover::MockMode::fixture;
      options.fixtures = std::make_shared<const prover::FixtureSet>(
          prover::FixtureSet::load_file(config_.fixtures_path));
      launcher = std::make_shared<prover::InProcessLauncher>(options);
      break;
    }
    case ProverMode::external: {
      auto endpoints = prover::ExternalLauncher::parse_endpoints(config_.prover_endpoints);
      config_.pool.max = std::min<int>(config_.pool.max, static_cast<int>(endpoints.size()));
      config_.pool.initial = std::min(config_.pool.initial, config_.pool.max);
      launcher = std::make_shared<prover::ExternalLauncher>(std::move(endpoints));
      break;
    }
  }
  pool_ = std::make_shared<prover::Pool>(config_.pool, launcher);

  ServiceConfig sc;
  sc.locale_default = config_.locale_default;
  sc.default_issuer = config_.auth.issuers.empty() ? "" : config_.auth.issuers.front().issuer;
  sc.session_idle_timeout = config_.session_idle_timeout;
  sc.gate_after_failed_task = config_.gate_after_failed_task;
  service_ = std::make_unique<Service>(sc, TokenVerifier(config_.auth), store_, pool_);

  if (!config_.tutorials_dir.empty()) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(config_.tutorials_dir)) {
      if (entry.path().extension() == ".toml") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
      service_->seed_tutorial(read_file(path.string()));
      spdlog::info("seeded tutorial from {}", path.string());
    }
  }
  server_ = std::make_unique<HttpServer>(*service_, config_.listen_host, config_.listen_port,
                                         config_.http_threads);
}

Application::~Application() {
  stop();
  server_.reset();
  service_.reset();
  if (pool_) pool_->stop_monitor();
}

void Application::start() {
  server_->start();
  pool_->start_monitor();
  sweeper_ = std::thread([this] {
    std::unique_lock lock(mutex_);
    while (!cv_.wait_for(lock, std::chrono::seconds(30), [&] { return stopping_; })) {
      lock.unlock();
      if (std::size_t n = service_->expire_idle_sessions(); n > 0) {
        spdlog::info("released {} idle prover sessions", n);
      }
      lock.lock();
    }
  });
}

void Application::stop() {
  {
    std::lock_guard lock(mutex_);
    if (stopping_) return;
    stopping_ = true;
  }
  cv_.notify_all();
  if (sweeper_.joinable()) sweeper_.join();
  if (server_) server_->stop();
}

void Application::wait() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return stopping_; });
}

std::uint16_t Application::port() const { return server_->port(); }

}  // namespace pb::api
