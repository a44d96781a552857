#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "prover/client.hpp"
#include "prover/mock.hpp"
#include "prover/result.hpp"

namespace pb::prover {

using Millis = std::chrono::milliseconds;

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

// Starts and stops the prover process behind an instance id.
class Launcher {
 public:
  virtual ~Launcher() = default;
  // Throws pb::Error on launch failure.
  virtual Endpoint launch(int instance_id) = 0;
  virtual void stop(int instance_id) = 0;
};

// Runs one MockProverServer per instance inside this process. Failures and
// silence can be scripted per instance id for tests.
class InProcessLauncher : public Launcher {
 public:
  explicit InProcessLauncher(MockOptions options = {});
  ~InProcessLauncher() override;

  Endpoint launch(int instance_id) override;
  void stop(int instance_id) override;

  // Launches of these ids throw until cleared.
  void fail_launch(int instance_id, bool fail = true);
  // The running server keeps its connections but stops replying. A
  // relaunch starts a responsive server.
  void set_silent(int instance_id, bool silent);
  std::size_t running() const;
  std::uint64_t launches() const;

 private:
  MockOptions options_;
  mutable std::mutex mutex_;
  std::map<int, std::unique_ptr<MockProverServer>> servers_;
  std::set<int> failing_;
  std::uint64_t launches_ = 0;
};

// Pre-started servers at fixed endpoints; instance i uses endpoint i.
class ExternalLauncher : public Launcher {
 public:
  explicit ExternalLauncher(std::vector<Endpoint> endpoints);
  // "host:port,host:port". Throws pb::Error(invalid_argument).
  static std::vector<Endpoint> parse_endpoints(std::string_view list);

  Endpoint launch(int instance_id) override;
  void stop(int) override {}

 private:
  std::vector<Endpoint> endpoints_;
};

struct PoolConfig {
  int initial = 2;
  int max = 30;
  int session_cap = 16;
  Millis heartbeat_interval{5000};
  Millis heartbeat_timeout{1000};
  int heartbeat_threshold = 3;
  int students_per_pair = 25;
  Millis check_timeout{30000};
  int timeout_threshold = 3;
  Millis connect_timeout{2000};
  Millis startup_timeout{5000};
  std::string parent = "Pure";

  // Throws pb::Error(invalid_argument).
  void validate() const;
};

// Two instances per started group of `students_per_pair` students.
int instances_for_roster(std::size_t roster, int students_per_pair = 25);
// max(initial, sum over courses), clamped to [1, max].
int pool_target(const PoolConfig& config, const std::vector<std::size_t>& rosters);

enum class InstanceState { starting, healthy, unhealthy, draining, stopped };
std::string_view to_string(InstanceState state) noexcept;

struct SessionHandle {
  std::string session_id;
  int instance_id = -1;
  std::string parent;
  std::uint64_t lease = 0;
};

struct InstanceStatus {
  int id = 0;
  Endpoint endpoint;
  InstanceState state = InstanceState::starting;
  int active_sessions = 0;
  std::chrono::system_clock::time_point started_at;
  std::optional<std::chrono::system_clock::time_point> last_heartbeat;
  int missed_heartbeats = 0;
  int consecutive_timeouts = 0;
  std::uint64_t acquisitions = 0;
  int incarnation = 0;
};

struct PoolStatus {
  std::vector<InstanceStatus> instances;  // retired instances are omitted
  bool degraded = false;                  // some wanted instance not healthy

  int count(InstanceState state) const;
};

// Supervises prover instances and leases sessions on them. All methods are
// safe to call concurrently.
class Pool {
 public:
  // Launches `initial` instances and waits for them to answer a ping.
  // Throws pb::Error(no_healthy_instance) when none comes up.
  Pool(PoolConfig config, std::shared_ptr<Launcher> launcher);
  ~Pool();
  Pool(const Pool&) = delete;
  Pool& operator=(const Pool&) = delete;

  // Least active sessions among healthy instances, lowest id on ties.
  // Throws pb::Error(no_healthy_instance | all_at_capacity), or the
  // connection error when the chosen instance does not open a session.
  SessionHandle acquire_session();
  // A timeout tears the session down and invalidates the handle. Throws
  // pb::Error(invalid_argument) when the handle is not live.
  ProverResult check_theory(const SessionHandle& handle, const std::string& theory,
                            std::optional<Millis> timeout = std::nullopt);
  // Unknown or already released handles are ignored with a warning.
  void release_session(const SessionHandle& handle);
  bool is_live(const SessionHandle& handle) const;

  PoolStatus health_sweep();
  // Throws pb::Error(out_of_range) unless 1 <= target <= max.
  void scale(int target);
  int target() const;
  PoolStatus status() const;
  const PoolConfig& config() const { return config_; }

  int total_active_sessions() const;
  std::uint64_t protocol_errors() const;

  // Background health sweeps every heartbeat interval.
  void start_monitor();
  void stop_monitor();

 private:
  struct Instance {
    InstanceStatus status;
    bool retired = false;  // scaled away; stops once idle
  };
  struct Lease {
    std::uint64_t id = 0;
    int instance_id = 0;
    int incarnation = 0;
    std::string session_id;
    std::unique_ptr<ProverConnection> connection;
    std::mutex io;
  };

  void launch_instance(int id);
  // Pings starting instances until healthy; stops the rest at the deadline.
  void await_healthy(const std::vector<int>& ids);
  bool ping_endpoint(const Endpoint& endpoint, Millis timeout) const;
  void note_failure(const Lease& lease, bool timed_out);
  void drop_lease(const std::shared_ptr<Lease>& lease, bool stop_session);

  PoolConfig config_;
  std::shared_ptr<Launcher> launcher_;

  mutable std::mutex mutex_;  // guards everything below
  std::vector<Instance> instances_;
  std::map<std::uint64_t, std::shared_ptr<Lease>> leases_;
  std::uint64_t next_lease_ = 1;
  std::uint64_t protocol_errors_ = 0;
  int target_ = 0;

  std::mutex admin_mutex_;  // serializes sweeps and scaling

  std::mutex monitor_mutex_;
  std::condition_variable monitor_cv_;
  bool monitor_stop_ = false;
  std::thread monitor_;
};

}  // namespace pb::prover
