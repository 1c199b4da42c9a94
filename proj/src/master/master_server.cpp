#include "fpid/master/master_server.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "fpid/master/api_json.hpp"
#include "fpid/master/worker_session.hpp"

namespace fpid::master {

using nlohmann::json;

namespace {

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

std::vector<std::uint8_t> to_bytes(const std::string& s) { return {s.begin(), s.end()}; }

store::Metadata parse_metadata(const std::string& text) {
  store::Metadata m;
  if (text.empty()) return m;
  const auto j = json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("metadata must be a JSON object");
  for (const auto& [k, v] : j.items()) m[k] = v.is_string() ? v.get<std::string>() : v.dump();
  return m;
}

std::string form_value(const httplib::Request& req, const std::string& key) {
  if (req.has_file(key)) return req.get_file_value(key).content;
  if (req.has_param(key)) return req.get_param_value(key);
  return {};
}

}  // namespace

MasterServer::MasterServer(MasterConfig config)
    : core_(std::make_unique<MasterCore>(std::move(config))), http_(std::make_unique<httplib::Server>()) {
  const auto& cfg = core_->config();
  worker_listener_ = std::make_unique<util::TcpListener>(cfg.listen_workers);
  worker_port_ = worker_listener_->port();
  if (cfg.listen_client.port == 0) {
    const int p = http_->bind_to_any_port(cfg.listen_client.host);
    if (p < 0) throw util::NetError("cannot bind client API on " + cfg.listen_client.host);
    client_port_ = static_cast<std::uint16_t>(p);
  } else {
    if (!http_->bind_to_port(cfg.listen_client.host, cfg.listen_client.port)) {
      throw util::NetError("cannot bind client API on " + cfg.listen_client.to_string());
    }
    client_port_ = cfg.listen_client.port;
  }
  install_routes();
}

MasterServer::~MasterServer() { stop(); }

void MasterServer::install_routes() {
  auto& s = *http_;
  MasterCore& core = *core_;

  s.Post("/records", [&core](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_file("image")) return reply_json(res, 400, error_json("bad_request", "missing 'image' part"));
    const std::string name = form_value(req, "name");
    if (name.empty()) return reply_json(res, 400, error_json("bad_request", "missing 'name' part"));
    store::Metadata meta;
    try {
      meta = parse_metadata(form_value(req, "metadata"));
    } catch (const std::exception& e) {
      return reply_json(res, 400, error_json("bad_metadata", e.what()));
    }
    std::optional<store::PhotoUpload> photo;
    if (req.has_file("photo")) photo = store::PhotoUpload{to_bytes(req.get_file_value("photo").content)};
    try {
      const auto id = core.store().enroll(name, meta, to_bytes(req.get_file_value("image").content), photo);
      reply_json(res, 201, {{"recordId", id}});
    } catch (const store::EnrollmentError& e) {
      reply_json(res, 400, error_json("enrollment_rejected", e.what()));
    }
  });

  s.Get(R"(/records/([A-Za-z0-9_-]+))", [&core](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto r = core.store().get_record(req.matches[1]);
      json j = {{"recordId", r.record_id}, {"name", r.name}, {"metadata", r.metadata},
                {"hasPhoto", r.photo_path.has_value()}, {"hasTemplate", r.fingerprint_template.has_value()}};
      reply_json(res, 200, j);
    } catch (const store::NotFoundError& e) {
      reply_json(res, 404, error_json("not_found", e.what()));
    }
  });

  s.Get(R"(/records/([A-Za-z0-9_-]+)/image)", [&core](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto bytes = core.store().read_image_bytes(req.matches[1]);
      res.set_content(std::string(bytes.begin(), bytes.end()), "image/x-portable-graymap");
    } catch (const store::NotFoundError& e) {
      reply_json(res, 404, error_json("not_found", e.what()));
    }
  });

  s.Get(R"(/records/([A-Za-z0-9_-]+)/photo)", [&core](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto bytes = core.store().read_photo_bytes(req.matches[1]);
      if (!bytes) return reply_json(res, 404, error_json("not_found", "record has no photo"));
      res.set_content(std::string(bytes->begin(), bytes->end()), "application/octet-stream");
    } catch (const store::NotFoundError& e) {
      reply_json(res, 404, error_json("not_found", e.what()));
    }
  });

  s.Post("/queries", [&core](const httplib::Request& req, httplib::Response& res) {
    std::vector<QueryImage> images;
    if (req.has_file("images")) {
      for (const auto& f : req.get_file_values("images")) images.push_back({f.filename, to_bytes(f.content)});
    } else {
      for (const auto& [key, f] : req.files) images.push_back({f.filename.empty() ? key : f.filename, to_bytes(f.content)});
    }
    try {
      const auto id = core.submit_query(images);
      const auto snap = core.job_status(id, 0);
      reply_json(res, 202, {{"batchId", id}, {"tasks", snap.progress.total}});
    } catch (const QueryRejected& e) {
      json body = error_json("query_rejected", e.what());
      body["images"] = e.diagnostics();
      reply_json(res, 400, body);
    }
  });

  s.Get(R"(/queries/([A-Za-z0-9_-]+))", [&core](const httplib::Request& req, httplib::Response& res) {
    std::size_t tail = 50;
    if (req.has_param("tail")) {
      try {
        tail = std::stoul(req.get_param_value("tail"));
      } catch (const std::exception&) {
        return reply_json(res, 400, error_json("bad_request", "tail must be a non-negative integer"));
      }
    }
    try {
      reply_json(res, 200, snapshot_to_json(core.job_status(req.matches[1], tail)));
    } catch (const UnknownJobError& e) {
      reply_json(res, 404, error_json("not_found", e.what()));
    }
  });

  s.Get("/status", [&core](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, status_to_json(core.status()));
  });

  s.Get("/workers", [&core](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const auto& w : core.workers()) list.push_back(worker_to_json(w));
    reply_json(res, 200, list);
  });

  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string detail = "unknown error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      detail = e.what();
    } catch (...) {
    }
    reply_json(res, 500, error_json("internal", detail));
  });

  if (core.config().ui_dir) s.set_mount_point("/ui", core.config().ui_dir->string());
}

void MasterServer::start() {
  if (running_.exchange(true)) return;
  http_thread_ = std::thread([this] { http_->listen_after_bind(); });
  accept_thread_ = std::thread([this] { accept_loop(); });
  sweep_thread_ = std::thread([this] { sweep_loop(); });
  spdlog::info("master listening: client {}:{} workers {}:{}", core_->config().listen_client.host, client_port_,
               core_->config().listen_workers.host, worker_port_);
}

void MasterServer::accept_loop() {
  while (running_) {
    std::string peer;
    auto fd = worker_listener_->accept(std::chrono::milliseconds(50), &peer);
    if (!fd) continue;
    auto channel = std::make_shared<util::LineChannel>(std::move(*fd));
    std::lock_guard lock(conn_mutex_);
    channels_.push_back(channel);
    conn_threads_.emplace_back([this, channel, peer] { serve_connection(channel, peer); });
  }
}

void MasterServer::serve_connection(std::shared_ptr<util::LineChannel> channel, std::string peer) {
  WorkerSession session(*core_, peer);
  std::string line;
  try {
    while (running_) {
      const auto st = channel->read_line(line, std::chrono::milliseconds(10));
      if (st == util::LineChannel::ReadStatus::Closed) break;
      auto out = st == util::LineChannel::ReadStatus::Line ? session.on_line(line) : session.on_tick();
      bool ok = true;
      for (const auto& l : out.lines) ok = ok && channel->send_line(l);
      if (!ok || out.close) break;
    }
  } catch (const std::exception& e) {
    spdlog::warn("worker connection {} failed: {}", peer, e.what());
  }
  session.on_disconnect();
  channel->shutdown();
}

void MasterServer::sweep_loop() {
  const double hb = core_->config().heartbeat_secs;
  const auto period = std::chrono::milliseconds(static_cast<long>(std::clamp(hb * 250.0, 20.0, 250.0)));
  while (running_) {
    core_->sweep();
    std::unique_lock lock(conn_mutex_);
    stopped_cv_.wait_for(lock, period, [this] { return stopped_; });
  }
}

void MasterServer::stop() {
  if (!running_.exchange(false)) return;
  http_->stop();
  if (accept_thread_.joinable()) accept_thread_.join();
  std::list<std::thread> threads;
  {
    std::lock_guard lock(conn_mutex_);
    stopped_ = true;
    for (auto& w : channels_)
      if (auto c = w.lock()) c->shutdown();
    threads.swap(conn_threads_);
  }
  stopped_cv_.notify_all();
  if (http_thread_.joinable()) http_thread_.join();
  if (sweep_thread_.joinable()) sweep_thread_.join();
  for (auto& t : threads)
    if (t.joinable()) t.join();
  worker_listener_->close();
}

void MasterServer::wait() {
  std::unique_lock lock(conn_mutex_);
  stopped_cv_.wait(lock, [this] { return stopped_; });
}

}  // namespace fpid::master
