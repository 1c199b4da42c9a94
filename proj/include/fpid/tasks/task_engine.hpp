#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "fpid/tasks/types.hpp"

namespace fpid::tasks {

/// Supplies the payload carried for one record.
using PayloadLoader = std::function<RecordPayload(const std::string& record_id)>;

/// Splits `record_ids` in order into tasks of at most `pack_size` records,
/// each carrying the whole query list. Task ids are "<batchId>-t<seq>".
std::vector<ComparisonTask> build_tasks(const std::vector<std::string>& record_ids, const QueryBatch& batch,
                                        std::size_t pack_size = 1, const PayloadLoader& loader = {});

struct Progress {
  std::size_t total = 0;
  std::size_t queued = 0;
  std::size_t in_flight = 0;
  std::size_t done = 0;

  friend bool operator==(const Progress&, const Progress&) = default;
};

enum class CompleteOutcome {
  Accepted,
  Duplicate,  // task already done; first result wins
  Unknown,    // never dispatched
  Invalid,    // score set does not cover records x queries, or out of range
};

struct DispatchEvent {
  std::string task_id;
  std::string worker_id;
};

/// FIFO queue of comparison tasks with in-flight accounting. All methods are
/// thread-safe; a task is never handed to two workers unless it expired or
/// its worker was lost.
class TaskQueue {
 public:
  using Clock = std::chrono::steady_clock;
  using NowFn = std::function<Clock::time_point()>;

  explicit TaskQueue(NowFn now = &Clock::now);

  void enqueue(std::vector<ComparisonTask> tasks);
  std::optional<ComparisonTask> next_task(const std::string& worker_id);
  CompleteOutcome complete(const SimilarityResult& result);

  /// In-flight tasks dispatched more than `timeout` ago go back to the head
  /// of the queue, oldest first.
  std::vector<std::string> requeue_expired(std::chrono::milliseconds timeout);
  /// Requeues everything in flight on `worker_id`.
  std::vector<std::string> requeue_worker(const std::string& worker_id);

  Progress progress() const;
  Progress progress(const std::string& batch_id) const;
  std::size_t queued() const;

  std::vector<DispatchEvent> dispatch_log() const;
  /// Workers a task was taken away from, oldest first.
  std::vector<std::string> previous_workers(const std::string& task_id) const;

  /// Forgets every task of a finished batch.
  void forget_batch(const std::string& batch_id);

 private:
  enum class State { Queued, InFlight, Done };
  struct Entry {
    ComparisonTask task;
    State state = State::Queued;
    bool ever_dispatched = false;
    std::string worker_id;
    Clock::time_point dispatched_at{};
    std::vector<std::string> previous_workers;
  };

  void requeue_locked(std::vector<std::string>& ids);
  static bool covers(const ComparisonTask& task, const SimilarityResult& result);

  NowFn now_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, Entry> entries_;
  std::deque<std::string> order_;
  std::vector<DispatchEvent> log_;
};

/// Raised by aggregate() when some tasks of the batch have no result.
class IncompleteBatchError : public std::runtime_error {
 public:
  explicit IncompleteBatchError(std::size_t remaining);
  std::size_t remaining() const { return remaining_; }

 private:
  std::size_t remaining_;
};

/// Per query, the highest similarity over all records; ties go to the
/// smallest record id. Answers are ordered by query id. Results whose
/// best similarity falls below `min_similarity` report no match.
std::vector<MatchAnswer> aggregate(const QueryBatch& batch, std::span<const std::string> task_ids,
                                   std::span<const SimilarityResult> results, double min_similarity = 0.0);

}  // namespace fpid::tasks
