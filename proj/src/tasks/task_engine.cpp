#include "fpid/tasks/task_engine.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <stdexcept>
#include <unordered_set>

namespace fpid::tasks {

void QueryBatch::validate() const {
  if (queries.empty()) throw std::invalid_argument("query batch needs at least one query");
  std::set<std::string> ids;
  for (const auto& q : queries)
    if (!ids.insert(q.query_id).second) throw std::invalid_argument("duplicate query id '" + q.query_id + "'");
}

std::vector<ComparisonTask> build_tasks(const std::vector<std::string>& record_ids, const QueryBatch& batch,
                                        std::size_t pack_size, const PayloadLoader& loader) {
  if (pack_size < 1) throw std::invalid_argument("packSize must be >= 1");
  auto queries = std::make_shared<const std::vector<Query>>(batch.queries);
  std::vector<ComparisonTask> tasks;
  tasks.reserve((record_ids.size() + pack_size - 1) / pack_size);
  for (std::size_t start = 0; start < record_ids.size(); start += pack_size) {
    ComparisonTask t;
    char seq[32];
    std::snprintf(seq, sizeof seq, "-t%06zu", tasks.size() + 1);
    t.task_id = batch.batch_id + seq;
    t.batch_id = batch.batch_id;
    t.queries = queries;
    const std::size_t end = std::min(record_ids.size(), start + pack_size);
    for (std::size_t i = start; i < end; ++i) {
      t.records.push_back(loader ? loader(record_ids[i]) : RecordPayload{record_ids[i], ImageBytes{}});
    }
    tasks.push_back(std::move(t));
  }
  return tasks;
}

TaskQueue::TaskQueue(NowFn now) : now_(std::move(now)) {}

void TaskQueue::enqueue(std::vector<ComparisonTask> tasks) {
  std::lock_guard lock(mutex_);
  for (auto& t : tasks) {
    const std::string id = t.task_id;
    auto [it, inserted] = entries_.try_emplace(id);
    if (!inserted) throw std::invalid_argument("task id '" + id + "' already queued");
    it->second.task = std::move(t);
    order_.push_back(id);
  }
}

std::optional<ComparisonTask> TaskQueue::next_task(const std::string& worker_id) {
  std::lock_guard lock(mutex_);
  while (!order_.empty()) {
    const std::string id = order_.front();
    order_.pop_front();
    auto it = entries_.find(id);
    if (it == entries_.end() || it->second.state != State::Queued) continue;
    Entry& e = it->second;
    e.state = State::InFlight;
    e.ever_dispatched = true;
    e.worker_id = worker_id;
    e.dispatched_at = now_();
    log_.push_back({id, worker_id});
    return e.task;
  }
  return std::nullopt;
}

bool TaskQueue::covers(const ComparisonTask& task, const SimilarityResult& result) {
  const std::size_t nq = task.queries ? task.queries->size() : 0;
  if (result.scores.size() != task.records.size() * nq) return false;
  std::set<std::pair<std::string, std::string>> expected, seen;
  for (const auto& r : task.records)
    for (const auto& q : *task.queries) expected.emplace(r.record_id, q.query_id);
  for (const auto& s : result.scores) {
    if (!(s.similarity >= 0.0 && s.similarity <= 1.0)) return false;
    if (!seen.emplace(s.record_id, s.query_id).second) return false;
  }
  return seen == expected;
}

CompleteOutcome TaskQueue::complete(const SimilarityResult& result) {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(result.task_id);
  if (it == entries_.end() || !it->second.ever_dispatched) return CompleteOutcome::Unknown;
  Entry& e = it->second;
  if (e.state == State::Done) return CompleteOutcome::Duplicate;
  if (!covers(e.task, result)) return CompleteOutcome::Invalid;
  // A requeued task may still be answered by its original worker.
  if (e.state == State::Queued) order_.erase(std::remove(order_.begin(), order_.end(), result.task_id), order_.end());
  e.state = State::Done;
  for (auto& r : e.task.records) r.payload = ImageBytes{};
  return CompleteOutcome::Accepted;
}

void TaskQueue::requeue_locked(std::vector<std::string>& ids) {
  std::sort(ids.begin(), ids.end(), [&](const std::string& a, const std::string& b) {
    const auto& ea = entries_.at(a);
    const auto& eb = entries_.at(b);
    return std::tie(ea.dispatched_at, a) < std::tie(eb.dispatched_at, b);
  });
  for (auto it = ids.rbegin(); it != ids.rend(); ++it) {
    Entry& e = entries_.at(*it);
    e.previous_workers.push_back(e.worker_id);
    e.worker_id.clear();
    e.state = State::Queued;
    order_.push_front(*it);
  }
}

std::vector<std::string> TaskQueue::requeue_expired(std::chrono::milliseconds timeout) {
  std::lock_guard lock(mutex_);
  const auto now = now_();
  std::vector<std::string> ids;
  for (const auto& [id, e] : entries_)
    if (e.state == State::InFlight && now - e.dispatched_at > timeout) ids.push_back(id);
  requeue_locked(ids);
  return ids;
}

std::vector<std::string> TaskQueue::requeue_worker(const std::string& worker_id) {
  std::lock_guard lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, e] : entries_)
    if (e.state == State::InFlight && e.worker_id == worker_id) ids.push_back(id);
  requeue_locked(ids);
  return ids;
}

Progress TaskQueue::progress() const {
  std::lock_guard lock(mutex_);
  Progress p;
  for (const auto& [id, e] : entries_) {
    ++p.total;
    switch (e.state) {
      case State::Queued: ++p.queued; break;
      case State::InFlight: ++p.in_flight; break;
      case State::Done: ++p.done; break;
    }
  }
  return p;
}

Progress TaskQueue::progress(const std::string& batch_id) const {
  std::lock_guard lock(mutex_);
  Progress p;
  for (const auto& [id, e] : entries_) {
    if (e.task.batch_id != batch_id) continue;
    ++p.total;
    switch (e.state) {
      case State::Queued: ++p.queued; break;
      case State::InFlight: ++p.in_flight; break;
      case State::Done: ++p.done; break;
    }
  }
  return p;
}

std::size_t TaskQueue::queued() const {
  std::lock_guard lock(mutex_);
  return order_.size();
}

std::vector<DispatchEvent> TaskQueue::dispatch_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::vector<std::string> TaskQueue::previous_workers(const std::string& task_id) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(task_id);
  return it == entries_.end() ? std::vector<std::string>{} : it->second.previous_workers;
}

void TaskQueue::forget_batch(const std::string& batch_id) {
  std::lock_guard lock(mutex_);
  std::unordered_set<std::string> gone;
  for (auto it = entries_.begin(); it != entries_.end();) {
    if (it->second.task.batch_id == batch_id) {
      gone.insert(it->first);
      it = entries_.erase(it);
    } else {
      ++it;
    }
  }
  order_.erase(std::remove_if(order_.begin(), order_.end(), [&](const std::string& id) { return gone.count(id) > 0; }),
               order_.end());
}

IncompleteBatchError::IncompleteBatchError(std::size_t remaining)
    : std::runtime_error("batch incomplete: " + std::to_string(remaining) + " task(s) remaining"),
      remaining_(remaining) {}

std::vector<MatchAnswer> aggregate(const QueryBatch& batch, std::span<const std::string> task_ids,
                                   std::span<const SimilarityResult> results, double min_similarity) {
  std::unordered_map<std::string, const SimilarityResult*> by_task;
  for (const auto& r : results) by_task.try_emplace(r.task_id, &r);
  std::size_t remaining = 0;
  for (const auto& id : task_ids)
    if (!by_task.count(id)) ++remaining;
  if (remaining > 0) throw IncompleteBatchError(remaining);

  std::map<std::string, MatchAnswer> best;
  for (const auto& q : batch.queries) best[q.query_id].query_id = q.query_id;

  std::set<std::pair<std::string, std::string>> counted;
  for (const auto& id : task_ids) {
    for (const auto& s : by_task.at(id)->scores) {
      if (!counted.emplace(s.record_id, s.query_id).second) continue;
      auto it = best.find(s.query_id);
      if (it == best.end()) continue;
      MatchAnswer& a = it->second;
      const bool better = !a.best_record_id || s.similarity > a.best_similarity ||
                          (s.similarity == a.best_similarity && s.record_id < *a.best_record_id);
      if (better) {
        a.best_record_id = s.record_id;
        a.best_similarity = s.similarity;
      }
    }
  }

  std::vector<MatchAnswer> out;
  out.reserve(best.size());
  for (auto& [qid, a] : best) {
    if (a.best_record_id && a.best_similarity < min_similarity) {
      a.best_record_id.reset();
      a.best_similarity = 0.0;
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace fpid::tasks
