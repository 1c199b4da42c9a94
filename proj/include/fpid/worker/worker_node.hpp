#pragma once

#include <atomic>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "fpid/tasks/types.hpp"
#include "fpid/util/net.hpp"
#include "fpid/worker/executor.hpp"

namespace fpid::worker {

struct WorkerConfig {
  util::HostPort master;
  std::string worker_id;
  std::optional<int> simulate_ms;
  double heartbeat_secs = 2.0;
  double initial_backoff_secs = 1.0;
  double max_backoff_secs = 30.0;
};

enum class WorkerExit {
  Stopped,   // stop() was called
  Rejected,  // the master refused the worker id
};

/// Worker daemon: registers with the master, executes one task at a time
/// and heartbeats from a separate thread while it computes. Reconnects with
/// exponential backoff whenever the connection drops.
class WorkerNode {
 public:
  explicit WorkerNode(WorkerConfig config);

  WorkerExit run();
  /// Thread-safe; makes run() return promptly.
  void stop();

  std::size_t tasks_executed() const { return tasks_executed_; }
  std::size_t connections() const { return connections_; }
  const std::string& rejection_reason() const { return rejection_; }

  /// Test hook, called before each task is executed.
  void set_task_hook(std::function<void(const tasks::ComparisonTask&)> hook) { task_hook_ = std::move(hook); }

 private:
  enum class SessionEnd { Dropped, Rejected, Stopped };
  SessionEnd session(const std::shared_ptr<util::LineChannel>& channel, bool& registered);
  void sleep_interruptible(double secs);

  WorkerConfig config_;
  ExecOptions exec_;
  std::atomic<bool> stop_{false};
  std::atomic<std::size_t> tasks_executed_{0};
  std::atomic<std::size_t> connections_{0};
  std::string rejection_;
  std::function<void(const tasks::ComparisonTask&)> task_hook_;

  std::mutex mutex_;
  std::condition_variable cv_;
  std::shared_ptr<util::LineChannel> current_;
};

}  // namespace fpid::worker
