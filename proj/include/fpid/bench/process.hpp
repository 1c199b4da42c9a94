#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <sys/types.h>
#include <vector>

namespace fpid::bench {

/// A spawned child process, killed and reaped on destruction.
class ChildProcess {
 public:
  ChildProcess() = default;
  /// argv[0] is the executable. stdout and stderr go to `log` (or /dev/null).
  ChildProcess(const std::vector<std::string>& argv, const std::optional<std::filesystem::path>& log = std::nullopt);
  ChildProcess(ChildProcess&& o) noexcept;
  ChildProcess& operator=(ChildProcess&& o) noexcept;
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;
  ~ChildProcess();

  pid_t pid() const { return pid_; }
  bool running();
  void signal(int sig);
  /// SIGTERM, then SIGKILL after `grace`. Returns the wait status.
  int terminate(std::chrono::milliseconds grace = std::chrono::milliseconds(2000));
  /// Waits up to `timeout`; nullopt if still running.
  std::optional<int> wait_for(std::chrono::milliseconds timeout);

 private:
  pid_t pid_ = -1;
  std::optional<int> status_;
};

}  // namespace fpid::bench
