#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fpid/bench/process.hpp"
#include "fpid/master/client.hpp"
#include "fpid/util/net.hpp"

namespace fpid::bench {

struct ClusterOptions {
  std::filesystem::path binary;    // the fpid executable
  std::filesystem::path store;     // master store directory
  std::filesystem::path work_dir;  // logs and port file
  std::size_t workers = 2;
  std::optional<int> simulate_ms;
  std::size_t pack_size = 1;
  double heartbeat_secs = 2.0;
  double task_timeout_secs = 60.0;
  bool cache_templates = false;
  std::chrono::milliseconds startup_timeout{15000};
};

/// One master and N worker processes on loopback, torn down on destruction.
class LocalCluster {
 public:
  /// Returns once every worker is registered; throws std::runtime_error on
  /// spawn failure or startup timeout.
  explicit LocalCluster(ClusterOptions options);
  ~LocalCluster();
  LocalCluster(const LocalCluster&) = delete;
  LocalCluster& operator=(const LocalCluster&) = delete;

  const util::HostPort& client_address() const { return client_address_; }
  std::uint16_t worker_port() const { return worker_port_; }
  master::MasterClient& client() { return *client_; }

  std::size_t worker_count() const { return workers_.size(); }
  ChildProcess& worker(std::size_t i) { return workers_.at(i); }
  ChildProcess& master() { return master_; }
  static std::string worker_id(std::size_t i) { return "w" + std::to_string(i + 1); }

  /// Waits until /status reports `n` live workers.
  void wait_for_workers(std::size_t n, std::chrono::milliseconds timeout);
  void shutdown();

 private:
  ClusterOptions options_;
  ChildProcess master_;
  std::vector<ChildProcess> workers_;
  util::HostPort client_address_;
  std::uint16_t worker_port_ = 0;
  std::unique_ptr<master::MasterClient> client_;
};

/// Tiny valid PGM used by the scaling benchmarks.
std::string blank_pgm(int size = 32);

/// Creates a store at `root` with `n` records holding blank images.
void populate_blank_store(const std::filesystem::path& root, std::size_t n);

}  // namespace fpid::bench
