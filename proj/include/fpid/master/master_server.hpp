#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <thread>

#include "fpid/master/master_core.hpp"
#include "fpid/util/net.hpp"

namespace httplib {
class Server;
}

namespace fpid::master {

/// Master node: HTTP/JSON client API plus the worker TCP protocol, both
/// served concurrently against one MasterCore.
///
///   POST /records            multipart image, name, metadata (JSON), photo
///   GET  /records/{id}       person record
///   GET  /records/{id}/image fingerprint PGM
///   GET  /records/{id}/photo photo bytes
///   POST /queries            multipart images -> {batchId}
///   GET  /queries/{batchId}  job snapshot, ?tail=N events
///   GET  /status             {records, workers, activeJobs}
///   GET  /workers            worker list
class MasterServer {
 public:
  /// Binds both listeners; throws util::NetError when a port is taken.
  explicit MasterServer(MasterConfig config);
  ~MasterServer();
  MasterServer(const MasterServer&) = delete;
  MasterServer& operator=(const MasterServer&) = delete;

  void start();
  /// Closes listeners and worker connections; in-flight work is abandoned.
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait();

  std::uint16_t client_port() const { return client_port_; }
  std::uint16_t worker_port() const { return worker_port_; }
  MasterCore& core() { return *core_; }

 private:
  void install_routes();
  void accept_loop();
  void serve_connection(std::shared_ptr<util::LineChannel> channel, std::string peer);
  void sweep_loop();

  std::unique_ptr<MasterCore> core_;
  std::unique_ptr<httplib::Server> http_;
  std::unique_ptr<util::TcpListener> worker_listener_;
  std::uint16_t client_port_ = 0;
  std::uint16_t worker_port_ = 0;

  std::atomic<bool> running_{false};
  std::thread http_thread_;
  std::thread accept_thread_;
  std::thread sweep_thread_;

  std::mutex conn_mutex_;
  std::condition_variable stopped_cv_;
  bool stopped_ = false;
  std::list<std::thread> conn_threads_;
  std::list<std::weak_ptr<util::LineChannel>> channels_;
};

}  // namespace fpid::master
