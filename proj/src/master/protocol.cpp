#include "fpid/master/protocol.hpp"

#include "fpid/core/error.hpp"
#include "fpid/core/template_json.hpp"
#include "fpid/util/base64.hpp"

namespace fpid::protocol {

using nlohmann::json;

std::string_view frame_type(const Frame& f) {
  struct Visitor {
    std::string_view operator()(const RegisterFrame&) const { return "register"; }
    std::string_view operator()(const TaskFrame&) const { return "task"; }
    std::string_view operator()(const NoTaskFrame&) const { return "no_task"; }
    std::string_view operator()(const ResultFrame&) const { return "result"; }
    std::string_view operator()(const HeartbeatFrame&) const { return "heartbeat"; }
    std::string_view operator()(const ErrorFrame&) const { return "error"; }
  };
  return std::visit(Visitor{}, f);
}

json task_to_json(const tasks::ComparisonTask& t) {
  json queries = json::array();
  if (t.queries) {
    for (const auto& q : *t.queries) queries.push_back({{"queryId", q.query_id}, {"template", q.features}});
  }
  json records = json::array();
  for (const auto& r : t.records) {
    json e = {{"recordId", r.record_id}};
    if (const auto* bytes = std::get_if<tasks::ImageBytes>(&r.payload)) {
      e["imageB64"] = util::base64_encode(*bytes);
    } else {
      e["template"] = std::get<core::MinutiaeTemplate>(r.payload);
    }
    records.push_back(std::move(e));
  }
  return {{"type", "task"}, {"taskId", t.task_id}, {"queries", queries}, {"records", records}};
}

tasks::ComparisonTask task_from_json(const json& j) {
  tasks::ComparisonTask t;
  t.task_id = j.at("taskId").get<std::string>();
  auto queries = std::make_shared<std::vector<tasks::Query>>();
  for (const auto& q : j.at("queries")) {
    queries->push_back({q.at("queryId").get<std::string>(), core::template_from_json(q.at("template"))});
  }
  t.queries = std::move(queries);
  for (const auto& r : j.at("records")) {
    tasks::RecordPayload p;
    p.record_id = r.at("recordId").get<std::string>();
    if (r.contains("imageB64")) {
      try {
        p.payload = util::base64_decode(r["imageB64"].get<std::string>());
      } catch (const std::invalid_argument&) {
        // Left empty; the executor reports it as a corrupt record.
        p.payload = tasks::ImageBytes{};
      }
    } else if (r.contains("template")) {
      p.payload = core::template_from_json(r["template"]);
    } else {
      throw ProtocolError("record '" + p.record_id + "' has neither imageB64 nor template");
    }
    t.records.push_back(std::move(p));
  }
  return t;
}

json result_to_json(const tasks::SimilarityResult& r) {
  json scores = json::array();
  for (const auto& s : r.scores)
    scores.push_back({{"recordId", s.record_id}, {"queryId", s.query_id}, {"similarity", s.similarity}});
  json j = {{"type", "result"}, {"taskId", r.task_id}, {"scores", scores}, {"elapsedMs", r.elapsed_ms}};
  if (!r.errors.empty()) {
    json errors = json::array();
    for (const auto& e : r.errors) errors.push_back({{"recordId", e.record_id}, {"message", e.message}});
    j["errors"] = std::move(errors);
  }
  return j;
}

tasks::SimilarityResult result_from_json(const json& j) {
  tasks::SimilarityResult r;
  r.task_id = j.at("taskId").get<std::string>();
  for (const auto& s : j.at("scores")) {
    r.scores.push_back(
        {s.at("recordId").get<std::string>(), s.at("queryId").get<std::string>(), s.at("similarity").get<double>()});
  }
  r.elapsed_ms = j.at("elapsedMs").get<double>();
  if (j.contains("errors")) {
    for (const auto& e : j["errors"])
      r.errors.push_back({e.at("recordId").get<std::string>(), e.at("message").get<std::string>()});
  }
  return r;
}

Frame parse_frame(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed frame: ") + e.what());
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw ProtocolError("frame without a string 'type' field");
  }
  const std::string type = j["type"].get<std::string>();
  try {
    if (type == "register") return RegisterFrame{j.at("workerId").get<std::string>()};
    if (type == "task") return TaskFrame{task_from_json(j)};
    if (type == "no_task") return NoTaskFrame{};
    if (type == "result") return ResultFrame{result_from_json(j)};
    if (type == "heartbeat") return HeartbeatFrame{};
    if (type == "error") return ErrorFrame{j.value("reason", std::string{})};
  } catch (const json::exception& e) {
    throw ProtocolError("malformed " + type + " frame: " + e.what());
  } catch (const core::FormatError& e) {
    throw ProtocolError("malformed " + type + " frame: " + e.what());
  }
  throw ProtocolError("unknown frame type '" + type + "'");
}

std::string encode_frame(const Frame& f) {
  struct Visitor {
    json operator()(const RegisterFrame& r) const { return {{"type", "register"}, {"workerId", r.worker_id}}; }
    json operator()(const TaskFrame& t) const { return task_to_json(t.task); }
    json operator()(const NoTaskFrame&) const { return {{"type", "no_task"}}; }
    json operator()(const ResultFrame& r) const { return result_to_json(r.result); }
    json operator()(const HeartbeatFrame&) const { return {{"type", "heartbeat"}}; }
    json operator()(const ErrorFrame& e) const { return {{"type", "error"}, {"reason", e.reason}}; }
  };
  return std::visit(Visitor{}, f).dump();
}

}  // namespace fpid::protocol
