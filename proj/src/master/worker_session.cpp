#include "fpid/master/worker_session.hpp"

#include <spdlog/spdlog.h>

#include "fpid/master/protocol.hpp"

namespace fpid::master {

using protocol::Frame;

WorkerSession::WorkerSession(MasterCore& core, std::string peer_address)
    : core_(core), peer_(std::move(peer_address)) {}

WorkerSession::Output WorkerSession::fail(std::string reason) {
  spdlog::warn("closing worker connection {} ({}): {}", peer_, worker_id_.empty() ? "unregistered" : worker_id_,
               reason);
  Output out;
  out.lines.push_back(protocol::encode_frame(protocol::ErrorFrame{std::move(reason)}));
  out.close = true;
  closed_ = true;
  return out;
}

void WorkerSession::offer_task(Output& out, bool announce_empty) {
  auto task = core_.assign_task(worker_id_, *token_);
  if (task) {
    current_task_ = task->task_id;
    out.lines.push_back(protocol::encode_frame(protocol::TaskFrame{std::move(*task)}));
  } else if (announce_empty) {
    out.lines.push_back(protocol::encode_frame(protocol::NoTaskFrame{}));
  }
}

WorkerSession::Output WorkerSession::on_line(std::string_view line) {
  if (closed_) return {};
  Frame frame;
  try {
    frame = protocol::parse_frame(line);
  } catch (const protocol::ProtocolError& e) {
    return fail(e.what());
  }
  const std::string type(protocol::frame_type(frame));

  if (!token_) {
    const auto* reg = std::get_if<protocol::RegisterFrame>(&frame);
    if (reg == nullptr) return fail("expected register before " + type);
    if (reg->worker_id.empty()) return fail("empty workerId");
    token_ = core_.register_worker(reg->worker_id, peer_);
    if (!token_) return fail("duplicate worker id '" + reg->worker_id + "'");
    worker_id_ = reg->worker_id;
    Output out;
    offer_task(out, true);
    return out;
  }

  core_.heartbeat(worker_id_, *token_);
  if (std::holds_alternative<protocol::HeartbeatFrame>(frame)) return {};

  if (auto* res = std::get_if<protocol::ResultFrame>(&frame)) {
    if (!current_task_) return fail("result while no task was assigned");
    if (res->result.task_id != *current_task_) {
      return fail("result for " + res->result.task_id + " but assigned " + *current_task_);
    }
    const auto outcome = core_.submit_result(worker_id_, *token_, std::move(res->result));
    if (outcome == tasks::CompleteOutcome::Invalid) {
      core_.abandon_task(worker_id_, *token_);
      return fail("result does not cover every record x query of " + *current_task_);
    }
    current_task_.reset();
    Output out;
    offer_task(out, true);
    return out;
  }
  if (std::holds_alternative<protocol::ErrorFrame>(frame)) {
    spdlog::warn("worker {} reported error: {}", worker_id_, std::get<protocol::ErrorFrame>(frame).reason);
    Output out;
    out.close = true;
    closed_ = true;
    return out;
  }
  return fail("unexpected " + type + " frame from worker");
}

WorkerSession::Output WorkerSession::on_tick() {
  Output out;
  if (closed_ || !token_ || current_task_) return out;
  offer_task(out, false);
  return out;
}

void WorkerSession::on_disconnect() {
  if (token_) core_.worker_disconnected(worker_id_, *token_);
  closed_ = true;
}

}  // namespace fpid::master
