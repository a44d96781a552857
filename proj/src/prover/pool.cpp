#include "prover/pool.hpp"

#include <algorithm>
#include <charconv>

#include <spdlog/spdlog.h>

#include "common/error.hpp"

namespace pb::prover {

using SteadyClock = std::chrono::steady_clock;
using SystemClock = std::chrono::system_clock;

InProcessLauncher::InProcessLauncher(MockOptions options)
    : options_(std::move(options)) {
  options_.port = 0;
}

InProcessLauncher::~InProcessLauncher() {
  std::map<int, std::unique_ptr<MockProverServer>> servers;
  {
    std::lock_guard lock(mutex_);
    servers.swap(servers_);
  }
  for (auto& [id, server] : servers) server->stop();
}

Endpoint InProcessLauncher::launch(int instance_id) {
  std::unique_ptr<MockProverServer> previous;
  std::unique_ptr<MockProverServer> server;
  {
    std::lock_guard lock(mutex_);
    ++launches_;
    if (failing_.contains(instance_id)) {
      throw Error(Errc::io_error,
                  "scripted launch failure for instance " + std::to_string(instance_id));
    }
    if (auto it = servers_.find(instance_id); it != servers_.end()) {
      previous = std::move(it->second);
      servers_.erase(it);
    }
  }
  if (previous) previous->stop();
  server = std::make_unique<MockProverServer>(options_);
  server->start();
  Endpoint endpoint{options_.host, server->port()};
  std::lock_guard lock(mutex_);
  servers_[instance_id] = std::move(server);
  return endpoint;
}

void InProcessLauncher::stop(int instance_id) {
  std::unique_ptr<MockProverServer> server;
  {
    std::lock_guard lock(mutex_);
    auto it = servers_.find(instance_id);
    if (it == servers_.end()) return;
    server = std::move(it->second);
    servers_.erase(it);
  }
  server->stop();
}

void InProcessLauncher::fail_launch(int instance_id, bool fail) {
  std::lock_guard lock(mutex_);
  if (fail) {
    failing_.insert(instance_id);
  } else {
    failing_.erase(instance_id);
  }
}

void InProcessLauncher::set_silent(int instance_id, bool silent) {
  std::lock_guard lock(mutex_);
  if (auto it = servers_.find(instance_id); it != servers_.end()) {
    it->second->set_silent(silent);
  }
}

std::size_t InProcessLauncher::running() const {
  std::lock_guard lock(mutex_);
  return servers_.size();
}

std::uint64_t InProcessLauncher::launches() const {
  std::lock_guard lock(mutex_);
  return launches_;
}

ExternalLauncher::ExternalLauncher(std::vector<Endpoint> endpoints)
    : endpoints_(std::move(endpoints)) {}

std::vector<Endpoint> ExternalLauncher::parse_endpoints(std::string_view list) {
  std::vector<Endpoint> out;
  while (!list.empty()) {
    std::size_t comma = list.find(',');
    std::string_view item = list.substr(0, comma);
    list = comma == std::string_view::npos ? std::string_view{} : list.substr(comma + 1);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty()) continue;
    std::size_t colon = item.rfind(':');
    unsigned port = 0;
    std::string_view digits =
        colon == std::string_view::npos ? std::string_view{} : item.substr(colon + 1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
    if (colon == 0 || colon == std::string_view::npos || ec != std::errc{} ||
        ptr != digits.data() + digits.size() || port == 0 || port > 65535) {
      throw Error(Errc::invalid_argument,
                  "bad prover endpoint '" + std::string(item) + "'; expected host:port");
    }
    out.push_back({std::string(item.substr(0, colon)), static_cast<std::uint16_t>(port)});
  }
  return out;
}

Endpoint ExternalLauncher::launch(int instance_id) {
  if (instance_id < 0 || static_cast<std::size_t>(instance_id) >= endpoints_.size()) {
    throw Error(Errc::out_of_range, "no external endpoint for instance " +
                                        std::to_string(instance_id));
  }
  return endpoints_[static_cast<std::size_t>(instance_id)];
}

void PoolConfig::validate() const {
  auto bad = [](const std::string& what) {
    throw Error(Errc::invalid_argument, "pool config: " + what);
  };
  if (max < 1) bad("max must be at least 1");
  if (initial < 1 || initial > max) bad("need 1 <= initial <= max");
  if (session_cap < 1) bad("session cap must be at least 1");
  if (heartbeat_threshold < 1) bad("heartbeat threshold must be at least 1");
  if (timeout_threshold < 1) bad("timeout threshold must be at least 1");
  if (students_per_pair < 1) bad("students per pair must be at least 1");
  if (check_timeout.count() <= 0 || heartbeat_timeout.count() <= 0 ||
      connect_timeout.count() <= 0) {
    bad("timeouts must be positive");
  }
}

int instances_for_roster(std::size_t roster, int students_per_pair) {
  if (students_per_pair < 1) {
    throw Error(Errc::invalid_argument, "students per pair must be at least 1");
  }
  std::size_t per = static_cast<std::size_t>(students_per_pair);
  return static_cast<int>(2 * ((roster + per - 1) / per));
}

int pool_target(const PoolConfig& config, const std::vector<std::size_t>& rosters) {
  long sum = 0;
  for (std::size_t r : rosters) sum += instances_for_roster(r, config.students_per_pair);
  long target = std::max<long>(config.initial, sum);
  return static_cast<int>(std::clamp<long>(target, 1, config.max));
}

std::string_view to_string(InstanceState state) noexcept {
  switch (state) {
    case InstanceState::starting: return "starting";
    case InstanceState::healthy: return "healthy";
    case InstanceState::unhealthy: return "unhealthy";
    case InstanceState::draining: return "draining";
    case InstanceState::stopped: return "stopped";
  }
  return "stopped";
}

int PoolStatus::count(InstanceState state) const {
  return static_cast<int>(std::count_if(
      instances.begin(), instances.end(),
      [state](const InstanceStatus& s) { return s.state == state; }));
}

Pool::Pool(PoolConfig config, std::shared_ptr<Launcher> launcher)
    : config_(std::move(config)), launcher_(std::move(launcher)) {
  config_.validate();
  if (!launcher_) throw Error(Errc::invalid_argument, "pool needs a launcher");
  target_ = config_.initial;
  instances_.resize(static_cast<std::size_t>(config_.initial));
  std::vector<int> ids;
  for (int i = 0; i < config_.initial; ++i) {
    instances_[static_cast<std::size_t>(i)].status.id = i;
    ids.push_back(i);
  }
  for (int id : ids) launch_instance(id);
  await_healthy(ids);
  if (status().count(InstanceState::healthy) == 0) {
    for (int id : ids) launcher_->stop(id);
    throw Error(Errc::no_healthy_instance, "no prover instance came up");
  }
}

Pool::~Pool() {
  stop_monitor();
  std::map<std::uint64_t, std::shared_ptr<Lease>> leases;
  std::vector<int> ids;
  {
    std::lock_guard lock(mutex_);
    leases.swap(leases_);
    for (const Instance& inst : instances_) ids.push_back(inst.status.id);
  }
  for (auto& [id, lease] : leases) {
    std::lock_guard io(lease->io);
    if (lease->connection) lease->connection->close();
  }
  for (int id : ids) launcher_->stop(id);
}

void Pool::launch_instance(int id) {
  Endpoint endpoint;
  try {
    endpoint = launcher_->launch(id);
  } catch (const std::exception& e) {
    spdlog::warn("prover instance {} failed to launch: {}", id, e.what());
    std::lock_guard lock(mutex_);
    Instance& inst = instances_[static_cast<std::size_t>(id)];
    inst.status.state = InstanceState::stopped;
    return;
  }
  std::lock_guard lock(mutex_);
  InstanceStatus& s = instances_[static_cast<std::size_t>(id)].status;
  s.endpoint = endpoint;
  s.state = InstanceState::starting;
  s.active_sessions = 0;
  s.started_at = SystemClock::now();
  s.last_heartbeat.reset();
  s.missed_heartbeats = 0;
  s.consecutive_timeouts = 0;
  ++s.incarnation;
}

void Pool::await_healthy(const std::vector<int>& ids) {
  auto deadline = SteadyClock::now() + config_.startup_timeout;
  while (true) {
    std::vector<std::pair<int, Endpoint>> pending;
    {
      std::lock_guard lock(mutex_);
      for (int id : ids) {
        const InstanceStatus& s = instances_[static_cast<std::size_t>(id)].status;
        if (s.state == InstanceState::starting) pending.emplace_back(id, s.endpoint);
      }
    }
    if (pending.empty()) return;
    for (const auto& [id, endpoint] : pending) {
      if (!ping_endpoint(endpoint, config_.heartbeat_timeout)) continue;
      std::lock_guard lock(mutex_);
      InstanceStatus& s = instances_[static_cast<std::size_t>(id)].status;
      if (s.state == InstanceState::starting) s.state = InstanceState::healthy;
      s.last_heartbeat = SystemClock::now();
    }
    if (SteadyClock::now() >= deadline) break;
    std::this_thread::sleep_for(Millis(20));
  }
  std::vector<int> failed;
  {
    std::lock_guard lock(mutex_);
    for (int id : ids) {
      InstanceStatus& s = instances_[static_cast<std::size_t>(id)].status;
      if (s.state == InstanceState::starting) {
        s.state = InstanceState::stopped;
        failed.push_back(id);
      }
    }
  }
  for (int id : failed) {
    spdlog::warn("prover instance {} did not answer within the startup timeout", id);
    launcher_->stop(id);
  }
}

bool Pool::ping_endpoint(const Endpoint& endpoint, Millis timeout) const {
  try {
    auto conn = ProverConnection::connect(endpoint.host, endpoint.port,
                                          std::min(timeout, config_.connect_timeout));
    bool ok = conn.ping(timeout);
    conn.close();
    return ok;
  } catch (const Error&) {
    return false;
  }
}

SessionHandle Pool::acquire_session() {
  auto lease = std::make_shared<Lease>();
  Endpoint endpoint;
  {
    std::lock_guard lock(mutex_);
    Instance* best = nullptr;
    bool any_healthy = false;
    for (Instance& inst : instances_) {
      if (inst.retired || inst.status.state != InstanceState::healthy) continue;
      any_healthy = true;
      if (inst.status.active_sessions >= config_.session_cap) continue;
      if (best == nullptr || inst.status.active_sessions < best->status.active_sessions) {
        best = &inst;
      }
    }
    if (!any_healthy) {
      throw Error(Errc::no_healthy_instance, "no healthy prover instance");
    }
    if (best == nullptr) {
      throw Error(Errc::all_at_capacity, "all prover instances are at capacity");
    }
    ++best->status.active_sessions;
    ++best->status.acquisitions;
    lease->id = next_lease_++;
    lease->instance_id = best->status.id;
    lease->incarnation = best->status.incarnation;
    endpoint = best->status.endpoint;
    leases_[lease->id] = lease;
  }
  try {
    std::lock_guard io(lease->io);
    auto conn = std::make_unique<ProverConnection>(ProverConnection::connect(
        endpoint.host, endpoint.port, config_.connect_timeout));
    lease->session_id = conn->session_start(config_.parent, config_.check_timeout);
    lease->connection = std::move(conn);
  } catch (const Error& e) {
    spdlog::warn("opening a session on instance {} failed: {}", lease->instance_id,
                 e.what());
    note_failure(*lease, e.code() == Errc::timeout);
    drop_lease(lease, false);
    throw;
  }
  return SessionHandle{lease->session_id, lease->instance_id, config_.parent, lease->id};
}

void Pool::note_failure(const Lease& lease, bool timed_out) {
  std::lock_guard lock(mutex_);
  if (!timed_out) {
    ++protocol_errors_;
    return;
  }
  InstanceStatus& s = instances_[static_cast<std::size_t>(lease.instance_id)].status;
  if (s.incarnation != lease.incarnation) return;
  if (++s.consecutive_timeouts >= config_.timeout_threshold &&
      s.state == InstanceState::healthy) {
    spdlog::warn("prover instance {} marked unhealthy after {} timeouts", s.id,
                 s.consecutive_timeouts);
    s.state = InstanceState::unhealthy;
  }
}

ProverResult Pool::check_theory(const SessionHandle& handle, const std::string& theory,
                                std::optional<Millis> timeout) {
  std::shared_ptr<Lease> lease;
  {
    std::lock_guard lock(mutex_);
    auto it = leases_.find(handle.lease);
    if (it == leases_.end()) {
      throw Error(Errc::invalid_argument, "session handle is not live");
    }
    lease = it->second;
  }
  ProverResult result;
  {
    std::lock_guard io(lease->io);
    if (!lease->connection) throw Error(Errc::invalid_argument, "session handle is not live");
    result = lease->connection->use_theories(lease->session_id, theory,
                                             timeout.value_or(config_.check_timeout));
  }
  switch (result.status) {
    case ResultStatus::timeout:
      note_failure(*lease, true);
      drop_lease(lease, false);
      break;
    case ResultStatus::protocol_error:
      note_failure(*lease, false);
      drop_lease(lease, false);
      break;
    case ResultStatus::finished_ok:
    case ResultStatus::finished_failed: {
      std::lock_guard lock(mutex_);
      InstanceStatus& s = instances_[static_cast<std::size_t>(lease->instance_id)].status;
      if (s.incarnation == lease->incarnation) s.consecutive_timeouts = 0;
      break;
    }
  }
  return result;
}

void Pool::drop_lease(const std::shared_ptr<Lease>& lease, bool stop_session) {
  std::optional<int> to_stop;
  {
    std::lock_guard lock(mutex_);
    if (leases_.erase(lease->id) == 0) return;
    Instance& inst = instances_[static_cast<std::size_t>(lease->instance_id)];
    if (inst.status.incarnation == lease->incarnation) {
      --inst.status.active_sessions;
      if (inst.retired && inst.status.state == InstanceState::draining &&
          inst.status.active_sessions == 0) {
        inst.status.state = InstanceState::stopped;
        to_stop = inst.status.id;
      }
    }
  }
  {
    std::lock_guard io(lease->io);
    if (lease->connection) {
      if (stop_session) {
        try {
          lease->connection->session_stop(lease->session_id, config_.heartbeat_timeout);
        } catch (const Error& e) {
          spdlog::debug("session_stop failed: {}", e.what());
        }
      }
      lease->connection->close();
      lease->connection.reset();
    }
  }
  if (to_stop) launcher_->stop(*to_stop);
}

void Pool::release_session(const SessionHandle& handle) {
  std::shared_ptr<Lease> lease;
  {
    std::lock_guard lock(mutex_);
    auto it = leases_.find(handle.lease);
    if (it == leases_.end()) {
      spdlog::warn("release of a session that is not live (lease {})", handle.lease);
      return;
    }
    lease = it->second;
  }
  drop_lease(lease, true);
}

bool Pool::is_live(const SessionHandle& handle) const {
  std::lock_guard lock(mutex_);
  return leases_.contains(handle.lease);
}

PoolStatus Pool::health_sweep() {
  std::lock_guard admin(admin_mutex_);
  struct Probe {
    int id;
    Endpoint endpoint;
    int incarnation;
  };
  std::vector<int> restart;
  std::vector<Probe> probes;
  {
    std::lock_guard lock(mutex_);
    for (const Instance& inst : instances_) {
      const InstanceStatus& s = inst.status;
      if (!inst.retired &&
          (s.state == InstanceState::unhealthy || s.state == InstanceState::stopped)) {
        restart.push_back(s.id);
      } else if (s.state != InstanceState::stopped && s.state != InstanceState::unhealthy) {
        probes.push_back({s.id, s.endpoint, s.incarnation});
      }
    }
  }

  for (int id : restart) {
    std::vector<std::shared_ptr<Lease>> orphaned;
    {
      std::lock_guard lock(mutex_);
      for (auto it = leases_.begin(); it != leases_.end();) {
        if (it->second->instance_id == id) {
          orphaned.push_back(it->second);
          it = leases_.erase(it);
        } else {
          ++it;
        }
      }
    }
    for (const auto& lease : orphaned) {
      std::lock_guard io(lease->io);
      if (lease->connection) lease->connection->close();
      lease->connection.reset();
    }
    spdlog::info("restarting prover instance {}", id);
    launcher_->stop(id);
    launch_instance(id);
    Endpoint endpoint;
    int incarnation = 0;
    {
      std::lock_guard lock(mutex_);
      const InstanceStatus& s = instances_[static_cast<std::size_t>(id)].status;
      if (s.state != InstanceState::starting) continue;
      endpoint = s.endpoint;
      incarnation = s.incarnation;
    }
    probes.push_back({id, endpoint, incarnation});
  }

  std::vector<int> stop_now;
  for (const Probe& p : probes) {
    bool ok = ping_endpoint(p.endpoint, config_.heartbeat_timeout);
    std::lock_guard lock(mutex_);
    Instance& inst = instances_[static_cast<std::size_t>(p.id)];
    InstanceStatus& s = inst.status;
    if (s.incarnation != p.incarnation || s.state == InstanceState::stopped) continue;
    if (ok) {
      s.missed_heartbeats = 0;
      s.last_heartbeat = SystemClock::now();
      if (s.state == InstanceState::starting) s.state = InstanceState::healthy;
    } else if (++s.missed_heartbeats >= config_.heartbeat_threshold) {
      if (s.state == InstanceState::draining) {
        s.state = InstanceState::stopped;
        stop_now.push_back(s.id);
      } else if (s.state != InstanceState::unhealthy) {
        spdlog::warn("prover instance {} missed {} heartbeats", s.id, s.missed_heartbeats);
        s.state = InstanceState::unhealthy;
      }
    }
  }
  for (int id : stop_now) launcher_->stop(id);
  return status();
}

void Pool::scale(int target) {
  if (target < 1 || target > config_.max) {
    throw Error(Errc::out_of_range, "scale target " + std::to_string(target) +
                                        " is outside [1, " + std::to_string(config_.max) +
                                        "]");
  }
  std::lock_guard admin(admin_mutex_);
  std::vector<int> launch;
  std::vector<int> stop_now;
  {
    std::lock_guard lock(mutex_);
    std::vector<Instance*> wanted;
    for (Instance& inst : instances_) {
      if (!inst.retired) wanted.push_back(&inst);
    }
    int have = static_cast<int>(wanted.size());
    if (target > have) {
      int need = target - have;
      for (Instance& inst : instances_) {
        if (need == 0) break;
        if (!inst.retired) continue;
        inst.retired = false;
        if (inst.status.state == InstanceState::draining) {
          inst.status.state = InstanceState::healthy;
        } else {
          launch.push_back(inst.status.id);
        }
        --need;
      }
      while (need-- > 0) {
        Instance& inst = instances_.emplace_back();
        inst.status.id = static_cast<int>(instances_.size()) - 1;
        inst.status.state = InstanceState::stopped;
        launch.push_back(inst.status.id);
      }
    } else if (target < have) {
      // idle instances go first, highest id first within each group
      std::sort(wanted.begin(), wanted.end(), [](const Instance* a, const Instance* b) {
        bool busy_a = a->status.active_sessions > 0;
        bool busy_b = b->status.active_sessions > 0;
        if (busy_a != busy_b) return !busy_a;
        return a->status.id > b->status.id;
      });
      for (int i = 0; i < have - target; ++i) {
        Instance& inst = *wanted[static_cast<std::size_t>(i)];
        inst.retired = true;
        if (inst.status.active_sessions == 0 ||
            inst.status.state == InstanceState::stopped) {
          if (inst.status.state != InstanceState::stopped) stop_now.push_back(inst.status.id);
          inst.status.state = InstanceState::stopped;
        } else {
          inst.status.state = InstanceState::draining;
        }
      }
    }
    target_ = target;
  }
  for (int id : stop_now) launcher_->stop(id);
  for (int id : launch) launch_instance(id);
  await_healthy(launch);
}

int Pool::target() const {
  std::lock_guard lock(mutex_);
  return target_;
}

PoolStatus Pool::status() const {
  std::lock_guard lock(mutex_);
  PoolStatus out;
  for (const Instance& inst : instances_) {
    if (inst.retired && inst.status.state == InstanceState::stopped) continue;
    out.instances.push_back(inst.status);
    if (!inst.retired && inst.status.state != InstanceState::healthy) out.degraded = true;
  }
  return out;
}

int Pool::total_active_sessions() const {
  std::lock_guard lock(mutex_);
  int total = 0;
  for (const Instance& inst : instances_) total += inst.status.active_sessions;
  return total;
}

std::uint64_t Pool::protocol_errors() const {
  std::lock_guard lock(mutex_);
  return protocol_errors_;
}

void Pool::start_monitor() {
  std::lock_guard lock(monitor_mutex_);
  if (monitor_.joinable()) return;
  monitor_stop_ = false;
  monitor_ = std::thread([this] {
    std::unique_lock lock(monitor_mutex_);
    while (!monitor_cv_.wait_for(lock, config_.heartbeat_interval,
                                 [this] { return monitor_stop_; })) {
      lock.unlock();
      try {
        health_sweep();
      } catch (const std::exception& e) {
        spdlog::error("health sweep failed: {}", e.what());
      }
      lock.lock();
    }
  });
}

void Pool::stop_monitor() {
  {
    std::lock_guard lock(monitor_mutex_);
    monitor_stop_ = true;
  }
  monitor_cv_.notify_all();
  if (monitor_.joinable()) monitor_.join();
}

}  // namespace pb::prover
