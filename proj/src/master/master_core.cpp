#include "fpid/master/master_core.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include <spdlog/spdlog.h>

#include "fpid/core/error.hpp"

namespace fpid::master {

using tasks::CompleteOutcome;

MasterConfig config_from_json(const nlohmann::json& j, MasterConfig c) {
  static const std::set<std::string> kKeys = {"store_path",     "listen_client",     "listen_workers",
                                              "pack_size",      "heartbeat_secs",    "task_timeout_secs",
                                              "min_similarity", "cache_templates",   "ui_dir"};
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!kKeys.count(k)) throw std::invalid_argument("unknown config key '" + k + "'");

  if (j.contains("store_path")) c.store_path = j["store_path"].get<std::string>();
  if (j.contains("listen_client")) c.listen_client = util::parse_host_port(j["listen_client"].get<std::string>());
  if (j.contains("listen_workers")) c.listen_workers = util::parse_host_port(j["listen_workers"].get<std::string>());
  if (j.contains("pack_size")) c.pack_size = j["pack_size"].get<std::size_t>();
  if (j.contains("heartbeat_secs")) c.heartbeat_secs = j["heartbeat_secs"].get<double>();
  if (j.contains("task_timeout_secs")) c.task_timeout_secs = j["task_timeout_secs"].get<double>();
  if (j.contains("min_similarity")) c.min_similarity = j["min_similarity"].get<double>();
  if (j.contains("cache_templates")) c.cache_templates = j["cache_templates"].get<bool>();
  if (j.contains("ui_dir")) c.ui_dir = j["ui_dir"].get<std::string>();

  if (c.pack_size < 1) throw std::invalid_argument("pack_size must be >= 1");
  if (c.heartbeat_secs <= 0.0) throw std::invalid_argument("heartbeat_secs must be > 0");
  if (c.task_timeout_secs <= 0.0) throw std::invalid_argument("task_timeout_secs must be > 0");
  return c;
}

MasterConfig load_config(const std::filesystem::path& path, MasterConfig base) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  return config_from_json(nlohmann::json::parse(in), std::move(base));
}

std::string_view to_string(WorkerState s) {
  switch (s) {
    case WorkerState::Idle: return "Idle";
    case WorkerState::Busy: return "Busy";
    case WorkerState::Lost: return "Lost";
  }
  return "?";
}

MasterCore::MasterCore(MasterConfig config, tasks::TaskQueue::NowFn now)
    : config_(std::move(config)),
      now_(now),
      store_(config_.store_path, store::StoreOptions{config_.cache_templates}),
      queue_(std::move(now)) {}

tasks::RecordPayload MasterCore::load_payload(const std::string& record_id) const {
  if (config_.cache_templates) {
    auto rec = store_.get_record(record_id);
    if (rec.fingerprint_template) return {record_id, std::move(*rec.fingerprint_template)};
  }
  return {record_id, store_.read_image_bytes(record_id)};
}

void MasterCore::log_event(Job& job, std::string message) {
  const double at = std::chrono::duration<double>(now_() - job.submitted).count();
  job.events.push_back({at, std::move(message)});
}

std::string MasterCore::submit_query(const std::vector<QueryImage>& images) {
  if (images.empty()) throw QueryRejected("no query images", {"at least one image is required"});

  tasks::QueryBatch batch;
  std::vector<std::string> sources;
  std::vector<std::string> diagnostics;
  for (std::size_t i = 0; i < images.size(); ++i) {
    char qid[32];
    std::snprintf(qid, sizeof qid, "q%04zu", i + 1);
    try {
      const auto img = core::decode_pgm(images[i].bytes);
      batch.queries.push_back({qid, core::extract_minutiae(img)});
      sources.push_back(images[i].source);
    } catch (const std::exception& e) {
      diagnostics.push_back("image " + std::to_string(i) + " (" + images[i].source + "): " + e.what());
    }
  }
  if (!diagnostics.empty()) throw QueryRejected("undecodable query image(s)", std::move(diagnostics));

  const auto record_ids = store_.record_ids();

  std::lock_guard lock(mutex_);
  char bid[32];
  std::snprintf(bid, sizeof bid, "b%06zu", next_batch_++);
  batch.batch_id = bid;

  auto tasks = tasks::build_tasks(record_ids, batch, config_.pack_size,
                                  [this](const std::string& id) { return load_payload(id); });

  Job job;
  job.batch = std::move(batch);
  job.query_sources = std::move(sources);
  job.submitted_wall = std::chrono::system_clock::now();
  job.submitted = now_();
  for (const auto& t : tasks) {
    job.task_ids.push_back(t.task_id);
    task_batch_[t.task_id] = bid;
  }
  log_event(job, "batch created, " + std::to_string(tasks.size()) + " tasks, " +
                     std::to_string(job.batch.queries.size()) + " queries");
  auto [it, inserted] = jobs_.emplace(bid, std::move(job));
  queue_.enqueue(std::move(tasks));
  if (it->second.task_ids.empty()) finish_job(it->second);
  spdlog::info("batch {} submitted: {} tasks", bid, it->second.task_ids.size());
  return bid;
}

void MasterCore::finish_job(Job& job) {
  job.finished = now_();
  auto answers = tasks::aggregate(job.batch, job.task_ids, job.results, config_.min_similarity);
  for (auto& a : answers) {
    if (!a.best_record_id) continue;
    try {
      const auto rec = store_.get_record(*a.best_record_id);
      tasks::PersonInfo p{rec.name, rec.metadata, std::nullopt};
      if (rec.photo_path) p.photo = rec.photo_path->generic_string();
      a.person = std::move(p);
    } catch (const store::NotFoundError&) {
    }
  }
  job.answers = std::move(answers);
  const double secs = std::chrono::duration<double>(*job.finished - job.submitted).count();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", secs);
  log_event(job, std::string("batch finished, total running time ") + buf + " s");
  job.results.clear();
  job.results.shrink_to_fit();
  queue_.forget_batch(job.batch.batch_id);
  for (const auto& id : job.task_ids) task_batch_.erase(id);
}

QueryJobSnapshot MasterCore::job_status(const std::string& batch_id, std::size_t event_tail) const {
  std::lock_guard lock(mutex_);
  auto it = jobs_.find(batch_id);
  if (it == jobs_.end()) throw UnknownJobError("no batch '" + batch_id + "'");
  const Job& job = it->second;
  QueryJobSnapshot s;
  s.batch_id = batch_id;
  s.submitted_at = job.submitted_wall;
  s.query_sources = job.query_sources;
  if (job.finished) {
    const std::size_t n = job.task_ids.size();
    s.progress = {n, 0, 0, n};
    s.answers = job.answers;
    s.total_running_secs = std::chrono::duration<double>(*job.finished - job.submitted).count();
  } else {
    s.progress = queue_.progress(batch_id);
  }
  s.event_count = job.events.size();
  const std::size_t from = job.events.size() > event_tail ? job.events.size() - event_tail : 0;
  s.event_log.assign(job.events.begin() + static_cast<std::ptrdiff_t>(from), job.events.end());
  return s;
}

bool MasterCore::is_lost(const Worker& w, Clock::time_point now) const {
  if (!w.connected) return true;
  return std::chrono::duration<double>(now - w.info.last_heartbeat).count() > 3.0 * config_.heartbeat_secs;
}

std::vector<WorkerInfo> MasterCore::workers() const {
  std::lock_guard lock(mutex_);
  const auto now = now_();
  std::vector<WorkerInfo> out;
  for (const auto& [id, w] : workers_) {
    WorkerInfo info = w.info;
    info.heartbeat_age_secs = std::chrono::duration<double>(now - info.last_heartbeat).count();
    if (is_lost(w, now)) info.state = WorkerState::Lost;
    out.push_back(std::move(info));
  }
  return out;
}

StatusSummary MasterCore::status() const {
  StatusSummary s;
  s.records = store_.size();
  std::lock_guard lock(mutex_);
  const auto now = now_();
  for (const auto& [id, w] : workers_)
    if (!is_lost(w, now)) ++s.workers;
  for (const auto& [id, j] : jobs_)
    if (!j.finished) ++s.active_jobs;
  return s;
}

MasterCore::Worker* MasterCore::live_worker(const std::string& worker_id, std::uint64_t token) {
  auto it = workers_.find(worker_id);
  if (it == workers_.end() || it->second.token != token) return nullptr;
  return &it->second;
}

std::optional<std::uint64_t> MasterCore::register_worker(const std::string& worker_id, const std::string& address) {
  std::lock_guard lock(mutex_);
  const auto now = now_();
  auto it = workers_.find(worker_id);
  if (it != workers_.end() && !is_lost(it->second, now)) return std::nullopt;
  if (it != workers_.end()) note_requeued(queue_.requeue_worker(worker_id), "worker " + worker_id + " re-registered");

  Worker& w = workers_[worker_id];
  w.token = next_token_++;
  w.connected = true;
  w.info.worker_id = worker_id;
  w.info.address = address;
  w.info.last_heartbeat = now;
  w.info.state = WorkerState::Idle;
  spdlog::info("worker {} registered from {}", worker_id, address);
  return w.token;
}

void MasterCore::heartbeat(const std::string& worker_id, std::uint64_t token) {
  std::lock_guard lock(mutex_);
  Worker* w = live_worker(worker_id, token);
  if (w == nullptr) return;
  w->info.last_heartbeat = now_();
  // Its tasks were requeued when it went silent.
  if (w->info.state == WorkerState::Lost && w->connected) w->info.state = WorkerState::Idle;
}

std::optional<tasks::ComparisonTask> MasterCore::assign_task(const std::string& worker_id, std::uint64_t token) {
  std::lock_guard lock(mutex_);
  Worker* w = live_worker(worker_id, token);
  if (w == nullptr) return std::nullopt;
  auto task = queue_.next_task(worker_id);
  if (!task) {
    w->info.state = WorkerState::Idle;
    return std::nullopt;
  }
  w->info.state = WorkerState::Busy;
  if (auto jt = jobs_.find(task->batch_id); jt != jobs_.end()) {
    log_event(jt->second, "task " + task->task_id + " dispatched to " + worker_id);
  }
  return task;
}

CompleteOutcome MasterCore::submit_result(const std::string& worker_id, std::uint64_t token,
                                          tasks::SimilarityResult result) {
  std::lock_guard lock(mutex_);
  Worker* w = live_worker(worker_id, token);
  if (w != nullptr) {
    w->info.last_heartbeat = now_();
    w->info.state = WorkerState::Idle;
  }
  result.worker_id = worker_id;
  const auto outcome = queue_.complete(result);
  if (outcome != CompleteOutcome::Accepted) {
    if (outcome == CompleteOutcome::Unknown) spdlog::warn("result for unknown task {} from {}", result.task_id, worker_id);
    return outcome;
  }
  if (w != nullptr) ++w->info.tasks_completed;

  auto bt = task_batch_.find(result.task_id);
  if (bt == task_batch_.end()) return outcome;
  Job& job = jobs_.at(bt->second);
  const std::string task_id = result.task_id;
  for (const auto& e : result.errors) log_event(job, "record " + e.record_id + " failed: " + e.message);
  job.results.push_back(std::move(result));
  log_event(job, "task " + task_id + " completed by " + worker_id + " (" + std::to_string(job.results.size()) + "/" +
                     std::to_string(job.task_ids.size()) + ")");
  if (job.results.size() == job.task_ids.size()) finish_job(job);
  return outcome;
}

void MasterCore::abandon_task(const std::string& worker_id, std::uint64_t token) {
  std::lock_guard lock(mutex_);
  if (live_worker(worker_id, token) == nullptr) return;
  note_requeued(queue_.requeue_worker(worker_id), "bad result from " + worker_id);
}

void MasterCore::worker_disconnected(const std::string& worker_id, std::uint64_t token) {
  std::lock_guard lock(mutex_);
  Worker* w = live_worker(worker_id, token);
  if (w == nullptr) return;
  w->connected = false;
  w->info.state = WorkerState::Lost;
  spdlog::warn("worker {} disconnected", worker_id);
  note_requeued(queue_.requeue_worker(worker_id), "worker " + worker_id + " lost");
}

void MasterCore::note_requeued(const std::vector<std::string>& task_ids, const std::string& why) {
  for (const auto& id : task_ids) {
    auto bt = task_batch_.find(id);
    if (bt == task_batch_.end()) continue;
    log_event(jobs_.at(bt->second), "task " + id + " requeued (" + why + ")");
  }
}

std::vector<std::string> MasterCore::sweep() {
  std::lock_guard lock(mutex_);
  const auto now = now_();
  std::vector<std::string> requeued;
  for (auto& [id, w] : workers_) {
    if (w.info.state == WorkerState::Lost || !is_lost(w, now)) continue;
    w.info.state = WorkerState::Lost;
    spdlog::warn("worker {} missed heartbeats; marked lost", id);
    auto ids = queue_.requeue_worker(id);
    note_requeued(ids, "worker " + id + " lost");
    requeued.insert(requeued.end(), ids.begin(), ids.end());
  }
  const auto timeout = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::duration<double>(config_.task_timeout_secs));
  auto expired = queue_.requeue_expired(timeout);
  note_requeued(expired, "timeout");
  requeued.insert(requeued.end(), expired.begin(), expired.end());
  return requeued;
}

}  // namespace fpid::master
