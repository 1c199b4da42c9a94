#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpid/store/record_store.hpp"
#include "fpid/tasks/task_engine.hpp"
#include "fpid/util/net.hpp"

namespace fpid::master {

struct MasterConfig {
  std::filesystem::path store_path = "store";
  util::HostPort listen_client{"127.0.0.1", 8080};
  util::HostPort listen_workers{"127.0.0.1", 9090};
  std::size_t pack_size = 1;
  double heartbeat_secs = 2.0;
  double task_timeout_secs = 60.0;
  double min_similarity = 0.0;
  /// Store templates at enrollment and ship them instead of images.
  bool cache_templates = false;
  std::optional<std::filesystem::path> ui_dir;
};

/// Keys: store_path, listen_client, listen_workers, pack_size,
/// heartbeat_secs, task_timeout_secs, min_similarity, cache_templates, ui_dir.
/// Unknown keys are rejected.
MasterConfig config_from_json(const nlohmann::json& j, MasterConfig base = {});
MasterConfig load_config(const std::filesystem::path& path, MasterConfig base = {});

enum class WorkerState { Idle, Busy, Lost };
std::string_view to_string(WorkerState s);

struct WorkerInfo {
  std::string worker_id;
  std::string address;
  std::chrono::steady_clock::time_point last_heartbeat{};
  double heartbeat_age_secs = 0.0;
  WorkerState state = WorkerState::Idle;
  std::size_t tasks_completed = 0;
};

struct JobEvent {
  double at_secs = 0.0;  // since submission
  std::string message;
};

struct QueryJobSnapshot {
  std::string batch_id;
  std::chrono::system_clock::time_point submitted_at{};
  tasks::Progress progress;
  std::vector<std::string> query_sources;  // indexed like the batch's queries
  std::optional<std::vector<tasks::MatchAnswer>> answers;
  std::optional<double> total_running_secs;
  std::vector<JobEvent> event_log;  // tail
  std::size_t event_count = 0;
};

struct StatusSummary {
  std::size_t records = 0;
  std::size_t workers = 0;  // connected and not lost
  std::size_t active_jobs = 0;
};

struct QueryImage {
  std::string source;
  std::vector<std::uint8_t> bytes;
};

/// Submission rejected; one diagnostic per offending image.
class QueryRejected : public std::runtime_error {
 public:
  QueryRejected(std::string what, std::vector<std::string> diagnostics)
      : std::runtime_error(std::move(what)), diagnostics_(std::move(diagnostics)) {}
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

class UnknownJobError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Network-free master state: record store, task queue, job table and
/// worker table. Every method is thread-safe.
class MasterCore {
 public:
  using Clock = std::chrono::steady_clock;

  explicit MasterCore(MasterConfig config, tasks::TaskQueue::NowFn now = &Clock::now);

  const MasterConfig& config() const { return config_; }
  store::RecordStore& store() { return store_; }
  const tasks::TaskQueue& queue() const { return queue_; }

  /// Extracts query templates, builds and enqueues one task per record pack.
  std::string submit_query(const std::vector<QueryImage>& images);
  QueryJobSnapshot job_status(const std::string& batch_id, std::size_t event_tail = SIZE_MAX) const;
  std::vector<WorkerInfo> workers() const;
  StatusSummary status() const;

  // Worker-side transitions, keyed by the session token from register_worker.
  // A token outlives nothing: a newer registration of the same id replaces it.

  /// nullopt when a live worker already holds the id.
  std::optional<std::uint64_t> register_worker(const std::string& worker_id, const std::string& address);
  void heartbeat(const std::string& worker_id, std::uint64_t token);
  std::optional<tasks::ComparisonTask> assign_task(const std::string& worker_id, std::uint64_t token);
  tasks::CompleteOutcome submit_result(const std::string& worker_id, std::uint64_t token,
                                       tasks::SimilarityResult result);
  /// Returns the task to the queue after a bad result.
  void abandon_task(const std::string& worker_id, std::uint64_t token);
  void worker_disconnected(const std::string& worker_id, std::uint64_t token);

  /// Marks silent workers lost and requeues their tasks and any task past
  /// the timeout. Returns the requeued task ids.
  std::vector<std::string> sweep();

 private:
  struct Job {
    tasks::QueryBatch batch;
    std::vector<std::string> query_sources;
    std::vector<std::string> task_ids;
    std::vector<tasks::SimilarityResult> results;
    std::chrono::system_clock::time_point submitted_wall{};
    Clock::time_point submitted{};
    std::optional<Clock::time_point> finished;
    std::optional<std::vector<tasks::MatchAnswer>> answers;
    std::vector<JobEvent> events;
  };
  struct Worker {
    WorkerInfo info;
    std::uint64_t token = 0;
    bool connected = false;
  };

  Worker* live_worker(const std::string& worker_id, std::uint64_t token);
  bool is_lost(const Worker& w, Clock::time_point now) const;
  void log_event(Job& job, std::string message);
  void note_requeued(const std::vector<std::string>& task_ids, const std::string& why);
  void finish_job(Job& job);
  tasks::RecordPayload load_payload(const std::string& record_id) const;

  MasterConfig config_;
  tasks::TaskQueue::NowFn now_;
  store::RecordStore store_;
  tasks::TaskQueue queue_;

  mutable std::mutex mutex_;
  std::map<std::string, Job> jobs_;
  std::map<std::string, std::string> task_batch_;
  std::map<std::string, Worker> workers_;
  std::uint64_t next_token_ = 1;
  std::size_t next_batch_ = 1;
};

}  // namespace fpid::master
