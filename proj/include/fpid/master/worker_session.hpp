#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fpid/master/master_core.hpp"

namespace fpid::master {

/// Master side of one worker connection:
///
///   REGISTER -> (TASK <-> RESULT | HEARTBEAT)*
///
/// The master answers REGISTER and every RESULT with either the next TASK or
/// NO_TASK; an idle worker that was told NO_TASK gets a TASK pushed from
/// on_tick() as soon as one is queued. Any frame out of that order closes
/// the connection with an ERROR frame naming the violation.
class WorkerSession {
 public:
  struct Output {
    std::vector<std::string> lines;
    bool close = false;
  };

  WorkerSession(MasterCore& core, std::string peer_address);

  Output on_line(std::string_view line);
  Output on_tick();
  void on_disconnect();

  bool registered() const { return token_.has_value(); }
  const std::string& worker_id() const { return worker_id_; }
  const std::optional<std::string>& current_task() const { return current_task_; }

 private:
  Output fail(std::string reason);
  void offer_task(Output& out, bool announce_empty);

  MasterCore& core_;
  std::string peer_;
  std::string worker_id_;
  std::optional<std::uint64_t> token_;
  std::optional<std::string> current_task_;
  bool closed_ = false;
};

}  // namespace fpid::master
