#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "fpid/tasks/types.hpp"

namespace fpid::protocol {

// Worker wire protocol: one JSON object per line.
//
//   worker -> master  {"type":"register","workerId":...}
//                     {"type":"result","taskId":...,"scores":[...],"elapsedMs":...}
//                     {"type":"heartbeat"}
//   master -> worker  {"type":"task","taskId":...,"queries":[...],"records":[...]}
//                     {"type":"no_task"}
//   either way        {"type":"error","reason":...}

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RegisterFrame {
  std::string worker_id;
};
struct TaskFrame {
  tasks::ComparisonTask task;
};
struct NoTaskFrame {};
struct ResultFrame {
  tasks::SimilarityResult result;  // worker_id is filled in by the receiver
};
struct HeartbeatFrame {};
struct ErrorFrame {
  std::string reason;
};

using Frame = std::variant<RegisterFrame, TaskFrame, NoTaskFrame, ResultFrame, HeartbeatFrame, ErrorFrame>;

std::string_view frame_type(const Frame& f);

/// Throws ProtocolError on malformed JSON or missing fields.
Frame parse_frame(std::string_view line);
std::string encode_frame(const Frame& f);

nlohmann::json task_to_json(const tasks::ComparisonTask& t);
tasks::ComparisonTask task_from_json(const nlohmann::json& j);
nlohmann::json result_to_json(const tasks::SimilarityResult& r);
tasks::SimilarityResult result_from_json(const nlohmann::json& j);

}  // namespace fpid::protocol
