#include <doctest.h>

#include <thread>

#include <httplib.h>

#include "fpid/master/api_json.hpp"
#include "fpid/master/client.hpp"
#include "fpid/master/master_server.hpp"
#include "fpid/master/worker_session.hpp"
#include "fpid/util/net.hpp"
#include "master_helpers.hpp"

using namespace fpid;
using namespace std::chrono_literals;
using nlohmann::json;
using test::type_of;

namespace {

struct FakeClock {
  master::MasterCore::Clock::time_point now{};
  tasks::TaskQueue::NowFn fn() {
    return [this] { return now; };
  }
};

// Speaks the wire protocol by hand.
class FakeWorker {
 public:
  FakeWorker(std::uint16_t port, const std::string& id)
      : ch_(util::connect_tcp({"127.0.0.1", port})) {
    ch_.send_line(test::register_line(id));
  }
  std::string read(std::chrono::milliseconds timeout = 5s) {
    std::string line;
    const auto st = ch_.read_line(line, timeout);
    if (st != util::LineChannel::ReadStatus::Line) return {};
    return line;
  }
  void send(const std::string& line) { ch_.send_line(line); }
  void close() { ch_.shutdown(); }

 private:
  util::LineChannel ch_;
};

template <typename F>
bool eventually(F&& pred, std::chrono::milliseconds timeout = 5s) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (std::chrono::steady_clock::now() < deadline) {
    if (pred()) return true;
    std::this_thread::sleep_for(5ms);
  }
  return pred();
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = master::config_from_json(json::parse(R"({"store_path":"x","listen_client":"0.0.0.0:81",
      "pack_size":4,"heartbeat_secs":0.5,"task_timeout_secs":3,"min_similarity":0.2,"cache_templates":true})"));
  CHECK(c.store_path == "x");
  CHECK(c.listen_client.host == "0.0.0.0");
  CHECK(c.listen_client.port == 81);
  CHECK(c.listen_workers.port == 9090);
  CHECK(c.pack_size == 4);
  CHECK(c.heartbeat_secs == 0.5);
  CHECK(c.cache_templates);
  CHECK_THROWS_AS(master::config_from_json(json::parse(R"({"colour":"red"})")), std::invalid_argument);
  CHECK_THROWS_AS(master::config_from_json(json::parse(R"({"pack_size":0})")), std::invalid_argument);
  CHECK_THROWS_AS(master::config_from_json(json::parse(R"({"heartbeat_secs":0})")), std::invalid_argument);
  CHECK_THROWS_AS(master::config_from_json(json::parse(R"({"listen_client":"nope"})")), std::invalid_argument);
  CHECK_THROWS(master::config_from_json(json::parse(R"({"pack_size":"x"})")));
}

TEST_CASE("host:port parsing") {
  const auto hp = util::parse_host_port("example.org:123");
  CHECK(hp.host == "example.org");
  CHECK(hp.port == 123);
  CHECK(util::parse_host_port(":9").host == "127.0.0.1");
  CHECK_THROWS_AS(util::parse_host_port("host"), std::invalid_argument);
  CHECK_THROWS_AS(util::parse_host_port("host:70000"), std::invalid_argument);
  CHECK_THROWS_AS(util::parse_host_port("host:x"), std::invalid_argument);
}

TEST_CASE("query submission over an empty database finishes at once") {
  test::TempDir dir("master");
  master::MasterCore core(test::temp_config(dir));
  const auto b = core.submit_query({{"a.pgm", test::stroke_pgm()}, {"b.pgm", test::stroke_pgm(3)}});
  CHECK(b == "b000001");
  const auto s = core.job_status(b);
  REQUIRE(s.answers.has_value());
  CHECK(s.answers->size() == 2);
  CHECK_FALSE(s.answers->at(0).best_record_id.has_value());
  CHECK(s.progress.total == 0);
  CHECK(s.total_running_secs.has_value());
  CHECK(core.status().active_jobs == 0);
}

TEST_CASE("bad query images are rejected with per-file diagnostics") {
  test::TempDir dir("master");
  master::MasterCore core(test::temp_config(dir));
  test::enroll_n(core, 2);
  try {
    core.submit_query({{"ok.pgm", test::stroke_pgm()}, {"bad.txt", {'h', 'i'}}});
    FAIL("accepted");
  } catch (const master::QueryRejected& e) {
    REQUIRE(e.diagnostics().size() == 1);
    CHECK(e.diagnostics()[0].find("bad.txt") != std::string::npos);
  }
  CHECK_THROWS_AS(core.submit_query({}), master::QueryRejected);
  CHECK(core.queue().progress().total == 0);
  CHECK_THROWS_AS(core.job_status("b999999"), master::UnknownJobError);
}

TEST_CASE("silent workers are marked lost and their tasks requeued") {
  test::TempDir dir("master");
  FakeClock clk;
  auto cfg = test::temp_config(dir);
  cfg.heartbeat_secs = 1.0;
  cfg.task_timeout_secs = 10.0;
  master::MasterCore core(cfg, clk.fn());
  test::enroll_n(core, 2);
  const auto b = core.submit_query({{"p.pgm", test::stroke_pgm()}});
  const auto tok1 = core.register_worker("w1", "a").value();
  const auto tok2 = core.register_worker("w2", "b").value();
  const auto t1 = core.assign_task("w1", tok1).value();
  const auto t2 = core.assign_task("w2", tok2).value();

  clk.now += 2s;
  core.heartbeat("w2", tok2);
  CHECK(core.sweep().empty());
  clk.now += 2s;  // w1 silent for 4s > 3 heartbeats
  core.heartbeat("w2", tok2);
  CHECK(core.sweep() == std::vector<std::string>{t1.task_id});
  const auto ws = core.workers();
  CHECK(ws[0].state == master::WorkerState::Lost);
  CHECK(ws[1].state == master::WorkerState::Busy);
  CHECK(core.status().workers == 1);
  CHECK(core.job_status(b).progress.queued == 1);

  // nobody else registering with that id is refused while it is lost
  CHECK_FALSE(core.register_worker("w2", "c").has_value());

  // the lost worker comes back, heartbeats, and can finish its old task
  core.heartbeat("w1", tok1);
  CHECK(core.workers()[0].state == master::WorkerState::Idle);
  tasks::SimilarityResult r{t1.task_id, {{t1.records[0].record_id, "q0001", 0.4}}, "", 1.0, {}};
  CHECK(core.submit_result("w1", tok1, r) == tasks::CompleteOutcome::Accepted);
  tasks::SimilarityResult r2{t2.task_id, {{t2.records[0].record_id, "q0001", 0.6}}, "", 1.0, {}};
  CHECK(core.submit_result("w2", tok2, r2) == tasks::CompleteOutcome::Accepted);
  const auto snap = core.job_status(b);
  REQUIRE(snap.answers.has_value());
  CHECK(snap.answers->at(0).best_record_id == "r000002");
  bool requeue_logged = false;
  for (const auto& e : snap.event_log) requeue_logged |= e.message.find("requeued") != std::string::npos;
  CHECK(requeue_logged);
}

TEST_CASE("tasks past the timeout are requeued") {
  test::TempDir dir("master");
  FakeClock clk;
  auto cfg = test::temp_config(dir);
  cfg.heartbeat_secs = 100.0;
  cfg.task_timeout_secs = 5.0;
  master::MasterCore core(cfg, clk.fn());
  test::enroll_n(core, 1);
  core.submit_query({{"p.pgm", test::stroke_pgm()}});
  const auto tok = core.register_worker("w1", "a").value();
  const auto t = core.assign_task("w1", tok).value();
  clk.now += 4s;
  CHECK(core.sweep().empty());
  clk.now += 2s;
  CHECK(core.sweep() == std::vector<std::string>{t.task_id});
  const auto tok2 = core.register_worker("w2", "b").value();
  CHECK(core.assign_task("w2", tok2)->task_id == t.task_id);
}

TEST_CASE("job snapshot json") {
  test::TempDir dir("master");
  master::MasterCore core(test::temp_config(dir));
  core.store().enroll("Ann", {{"k", "v"}}, test::stroke_pgm(), store::PhotoUpload{{1, 2}});
  const auto b = core.submit_query({{"probe.pgm", test::stroke_pgm()}});
  const auto tok = core.register_worker("w1", "a").value();
  const auto t = core.assign_task("w1", tok).value();
  auto j = master::snapshot_to_json(core.job_status(b));
  CHECK(j.at("state") == "running");
  CHECK(j.at("progress") == json{{"total", 1}, {"queued", 0}, {"inFlight", 1}, {"done", 0}});
  CHECK(j.at("totalRunningTime").is_null());
  core.submit_result("w1", tok, {t.task_id, {{"r000001", "q0001", 1.0}}, "", 1.0, {}});
  j = master::snapshot_to_json(core.job_status(b, 2));
  CHECK(j.at("state") == "done");
  CHECK(j.at("eventLog").size() == 2);
  CHECK(j.at("eventCount").get<int>() >= 4);
  const auto a = j.at("answers").at(0);
  CHECK(a.at("queryId") == "q0001");
  CHECK(a.at("source") == "probe.pgm");
  CHECK(a.at("match") == true);
  CHECK(a.at("bestRecordId") == "r000001");
  CHECK(a.at("bestSimilarity") == 1.0);
  CHECK(a.at("person").at("name") == "Ann");
  CHECK(a.at("person").at("metadata").at("k") == "v");
  CHECK(a.at("person").contains("photo"));
}

TEST_CASE("min similarity floor reports no match") {
  test::TempDir dir("master");
  auto cfg = test::temp_config(dir);
  cfg.min_similarity = 0.5;
  master::MasterCore core(cfg);
  test::enroll_n(core, 1);
  const auto b = core.submit_query({{"p.pgm", test::stroke_pgm()}});
  const auto tok = core.register_worker("w1", "a").value();
  const auto t = core.assign_task("w1", tok).value();
  core.submit_result("w1", tok, {t.task_id, {{"r000001", "q0001", 0.3}}, "", 1.0, {}});
  const auto j = master::snapshot_to_json(core.job_status(b));
  CHECK(j.at("answers")[0].at("match") == false);
  CHECK(j.at("answers")[0].at("bestRecordId").is_null());
}

TEST_CASE("live master: HTTP API and worker port") {
  test::TempDir dir("live");
  master::MasterServer server(test::temp_config(dir));
  server.start();
  REQUIRE(server.client_port() != 0);
  REQUIRE(server.worker_port() != 0);
  master::MasterClient client({"127.0.0.1", server.client_port()});
  httplib::Client http("127.0.0.1", server.client_port());

  SUBCASE("fresh master reports 0 records, 0 workers") {
    CHECK(client.status() == json{{"records", 0}, {"workers", 0}, {"activeJobs", 0}});
    CHECK(client.workers() == json::array());
  }

  SUBCASE("enrollment and record endpoints") {
    const auto pgm = test::stroke_pgm();
    const std::string img(pgm.begin(), pgm.end());
    const auto id = client.enroll("Ann Lee", {{"dept", "R&D"}}, img, std::string("PHOTO"));
    CHECK(id == "r000001");
    auto r = http.Get("/records/r000001");
    REQUIRE(r);
    CHECK(r->status == 200);
    const auto j = json::parse(r->body);
    CHECK(j.at("name") == "Ann Lee");
    CHECK(j.at("metadata").at("dept") == "R&D");
    r = http.Get("/records/r000001/image");
    CHECK(r->body == img);
    r = http.Get("/records/r000001/photo");
    CHECK(r->body == "PHOTO");
    CHECK(http.Get("/records/r000009")->status == 404);
    CHECK(http.Get("/queries/b000123")->status == 404);
    CHECK_THROWS_AS(client.enroll("x", {}, "not a pgm"), master::ApiError);
    httplib::MultipartFormDataItems noname = {{"image", img, "f.pgm", ""}};
    CHECK(http.Post("/records", noname)->status == 400);
    httplib::MultipartFormDataItems badmeta = {{"image", img, "f.pgm", ""}, {"name", "n", "", ""},
                                               {"metadata", "[1]", "", ""}};
    CHECK(http.Post("/records", badmeta)->status == 400);
  }

  SUBCASE("bad query upload lists diagnostics") {
    httplib::MultipartFormDataItems items = {{"images", "junk", "junk.pgm", ""}};
    const auto r = http.Post("/queries", items);
    REQUIRE(r);
    CHECK(r->status == 400);
    const auto j = json::parse(r->body);
    CHECK(j.at("images").size() == 1);
    CHECK(http.Post("/queries", httplib::MultipartFormDataItems{})->status == 400);
  }

  SUBCASE("eight idle workers, bounded in-flight work, full batch") {
    for (int i = 0; i < 12; ++i) server.core().store().enroll("P" + std::to_string(i), {}, test::stroke_pgm());
    std::vector<std::unique_ptr<FakeWorker>> ws;
    for (int i = 0; i < 8; ++i) {
      ws.push_back(std::make_unique<FakeWorker>(server.worker_port(), "w" + std::to_string(i)));
      CHECK(type_of(ws.back()->read()) == "no_task");
    }
    CHECK(eventually([&] { return client.status().at("workers") == 8; }));
    for (const auto& w : client.workers()) {
      CHECK(w.at("state") == "Idle");
      CHECK(w.at("tasksCompleted") == 0);
    }

    const auto pgm = test::stroke_pgm();
    const std::string b = client.submit_query({{"p.pgm", std::string(pgm.begin(), pgm.end())}});
    // each worker gets exactly one pushed task
    std::vector<std::string> held(8);
    for (int i = 0; i < 8; ++i) {
      held[i] = ws[i]->read();
      CHECK(type_of(held[i]) == "task");
    }
    auto snap = client.job(b);
    CHECK(snap.at("progress").at("inFlight").get<int>() <= 8);
    CHECK(snap.at("progress").at("queued").get<int>() == 4);
    for (const auto& w : client.workers()) CHECK(w.at("state") == "Busy");

    int done = 0;
    while (done < 12) {
      for (int i = 0; i < 8 && done < 12; ++i) {
        if (held[i].empty() || type_of(held[i]) != "task") continue;
        ws[i]->send(test::result_line(held[i], 0.01 * (done + 1)));
        ++done;
        held[i] = ws[i]->read();
        CHECK(client.job(b).at("progress").at("inFlight").get<int>() <= 8);
      }
    }
    snap = client.wait_for(b, 5s);
    CHECK(snap.at("state") == "done");
    CHECK(snap.at("progress").at("done") == 12);
    CHECK(snap.at("answers")[0].at("bestSimilarity") == doctest::Approx(0.12));
    CHECK(snap.at("totalRunningTime").get<double>() > 0.0);
  }

  SUBCASE("disconnect requeues to another worker") {
    server.core().store().enroll("P", {}, test::stroke_pgm());
    auto a = std::make_unique<FakeWorker>(server.worker_port(), "a");
    CHECK(type_of(a->read()) == "no_task");
    const auto pgm = test::stroke_pgm();
    const std::string b = client.submit_query({{"p.pgm", std::string(pgm.begin(), pgm.end())}});
    CHECK(type_of(a->read()) == "task");
    a->close();
    FakeWorker c(server.worker_port(), "c");
    const auto task = c.read();
    REQUIRE(type_of(task) == "task");
    c.send(test::result_line(task, 0.7));
    CHECK(client.wait_for(b, 5s).at("answers")[0].at("bestSimilarity") == 0.7);
  }

  server.stop();
}

TEST_CASE("live master: heartbeat silence marks a worker lost") {
  test::TempDir dir("live");
  auto cfg = test::temp_config(dir);
  cfg.heartbeat_secs = 0.2;
  master::MasterServer server(cfg);
  server.start();
  master::MasterClient client({"127.0.0.1", server.client_port()});
  FakeWorker w(server.worker_port(), "quiet");
  CHECK(type_of(w.read()) == "no_task");
  CHECK(eventually([&] { return client.status().at("workers") == 1; }));
  CHECK(eventually([&] { return client.workers()[0].at("state") == "Lost"; }, 3s));
  CHECK(client.status().at("workers") == 0);
  w.send(R"({"type":"heartbeat"})");
  CHECK(eventually([&] { return client.workers()[0].at("state") == "Idle"; }));
  server.stop();
}

TEST_CASE("client surfaces network errors") {
  master::MasterClient c({"127.0.0.1", 1});
  CHECK_THROWS_AS(c.status(), util::NetError);
}
