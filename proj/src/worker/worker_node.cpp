#include "fpid/worker/worker_node.hpp"

#include <thread>

#include <spdlog/spdlog.h>

#include "fpid/master/protocol.hpp"

namespace fpid::worker {

WorkerNode::WorkerNode(WorkerConfig config) : config_(std::move(config)) { exec_.simulate_ms = config_.simulate_ms; }

void WorkerNode::stop() {
  stop_ = true;
  std::lock_guard lock(mutex_);
  if (current_) current_->shutdown();
  cv_.notify_all();
}

void WorkerNode::sleep_interruptible(double secs) {
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, std::chrono::duration<double>(secs), [this] { return stop_.load(); });
}

WorkerExit WorkerNode::run() {
  double backoff = config_.initial_backoff_secs;
  while (!stop_) {
    std::shared_ptr<util::LineChannel> channel;
    try {
      channel = std::make_shared<util::LineChannel>(util::connect_tcp(config_.master));
    } catch (const util::NetError& e) {
      spdlog::warn("worker {}: {}; retrying in {:.0f} s", config_.worker_id, e.what(), backoff);
      sleep_interruptible(backoff);
      backoff = std::min(backoff * 2.0, config_.max_backoff_secs);
      continue;
    }
    {
      std::lock_guard lock(mutex_);
      current_ = channel;
      // stop() may have run between the loop check and publishing the channel.
      if (stop_) channel->shutdown();
    }
    ++connections_;

    bool registered = false;
    const SessionEnd end = session(channel, registered);
    {
      std::lock_guard lock(mutex_);
      current_.reset();
    }
    if (end == SessionEnd::Rejected) return WorkerExit::Rejected;
    if (end == SessionEnd::Stopped || stop_) break;
    if (registered) backoff = config_.initial_backoff_secs;
    spdlog::warn("worker {}: connection to master lost; reconnecting in {:.0f} s", config_.worker_id, backoff);
    sleep_interruptible(backoff);
    backoff = std::min(backoff * 2.0, config_.max_backoff_secs);
  }
  return WorkerExit::Stopped;
}

WorkerNode::SessionEnd WorkerNode::session(const std::shared_ptr<util::LineChannel>& channel, bool& registered) {
  if (!channel->send_line(protocol::encode_frame(protocol::RegisterFrame{config_.worker_id}))) {
    return SessionEnd::Dropped;
  }

  std::mutex hb_mutex;
  std::condition_variable hb_cv;
  bool hb_done = false;
  std::thread heartbeat([&] {
    std::unique_lock lock(hb_mutex);
    while (!hb_cv.wait_for(lock, std::chrono::duration<double>(config_.heartbeat_secs), [&] { return hb_done; })) {
      if (!channel->send_line(protocol::encode_frame(protocol::HeartbeatFrame{}))) break;
    }
  });
  auto stop_heartbeat = [&] {
    {
      std::lock_guard lock(hb_mutex);
      hb_done = true;
    }
    hb_cv.notify_all();
    heartbeat.join();
  };

  SessionEnd end = SessionEnd::Dropped;
  std::string line;
  try {
    while (!stop_) {
      const auto st = channel->read_line(line, std::chrono::milliseconds(100));
      if (st == util::LineChannel::ReadStatus::Timeout) continue;
      if (st == util::LineChannel::ReadStatus::Closed) break;

      protocol::Frame frame = protocol::parse_frame(line);
      if (auto* err = std::get_if<protocol::ErrorFrame>(&frame)) {
        if (err->reason.rfind("duplicate worker id", 0) == 0) {
          rejection_ = err->reason;
          spdlog::error("worker {}: registration rejected: {}", config_.worker_id, err->reason);
          end = SessionEnd::Rejected;
        } else {
          spdlog::warn("worker {}: master error: {}", config_.worker_id, err->reason);
        }
        break;
      }
      registered = true;
      if (auto* t = std::get_if<protocol::TaskFrame>(&frame)) {
        if (task_hook_) task_hook_(t->task);
        auto result = execute_task(t->task, exec_);
        result.worker_id = config_.worker_id;
        ++tasks_executed_;
        if (!channel->send_line(protocol::encode_frame(protocol::ResultFrame{std::move(result)}))) break;
      }
    }
    if (stop_ && end == SessionEnd::Dropped) end = SessionEnd::Stopped;
  } catch (const std::exception& e) {
    spdlog::warn("worker {}: {}", config_.worker_id, e.what());
  }
  stop_heartbeat();
  return end;
}

}  // namespace fpid::worker
