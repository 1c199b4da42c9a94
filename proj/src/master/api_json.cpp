#include "fpid/master/api_json.hpp"

namespace fpid::master {

using nlohmann::json;

json answer_to_json(const tasks::MatchAnswer& a, const std::string& source) {
  json j = {{"queryId", a.query_id},
            {"source", source},
            {"match", a.best_record_id.has_value()},
            {"bestRecordId", nullptr},
            {"bestSimilarity", a.best_similarity},
            {"person", nullptr}};
  if (a.best_record_id) j["bestRecordId"] = *a.best_record_id;
  if (a.person) {
    j["person"] = {{"name", a.person->name}, {"metadata", a.person->metadata}, {"photo", nullptr}};
    if (a.person->photo) j["person"]["photo"] = *a.person->photo;
  }
  return j;
}

json snapshot_to_json(const QueryJobSnapshot& s) {
  const auto submitted_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(s.submitted_at.time_since_epoch()).count();
  json j = {{"batchId", s.batch_id},
            {"submittedAt", submitted_ms},
            {"state", s.answers ? "done" : "running"},
            {"progress",
             {{"total", s.progress.total},
              {"queued", s.progress.queued},
              {"inFlight", s.progress.in_flight},
              {"done", s.progress.done}}},
            {"totalRunningTime", nullptr},
            {"answers", nullptr},
            {"eventCount", s.event_count}};
  if (s.total_running_secs) j["totalRunningTime"] = *s.total_running_secs;
  if (s.answers) {
    json answers = json::array();
    for (const auto& a : *s.answers) {
      // Query ids are q0001, q0002, ... in submission order.
      std::size_t idx = 0;
      try {
        idx = std::stoul(a.query_id.substr(1)) - 1;
      } catch (const std::exception&) {
        idx = s.query_sources.size();
      }
      answers.push_back(answer_to_json(a, idx < s.query_sources.size() ? s.query_sources[idx] : ""));
    }
    j["answers"] = std::move(answers);
  }
  json events = json::array();
  for (const auto& e : s.event_log) events.push_back({{"t", e.at_secs}, {"message", e.message}});
  j["eventLog"] = std::move(events);
  return j;
}

json worker_to_json(const WorkerInfo& w) {
  return {{"workerId", w.worker_id},
          {"address", w.address},
          {"state", to_string(w.state)},
          {"heartbeatAgeSecs", w.heartbeat_age_secs},
          {"tasksCompleted", w.tasks_completed}};
}

json status_to_json(const StatusSummary& s) {
  return {{"records", s.records}, {"workers", s.workers}, {"activeJobs", s.active_jobs}};
}

json error_json(std::string_view error, std::string_view detail) {
  return {{"error", error}, {"detail", detail}};
}

}  // namespace fpid::master
