#include <doctest.h>

#include "fpid/master/protocol.hpp"
#include "fpid/master/worker_session.hpp"
#include "fpid/util/base64.hpp"
#include "master_helpers.hpp"

using namespace fpid;
using namespace fpid::protocol;
using nlohmann::json;
using test::type_of;

TEST_CASE("base64 round trip and rejection") {
  for (std::size_t n = 0; n < 20; ++n) {
    std::vector<std::uint8_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<std::uint8_t>(i * 37 + 11);
    CHECK(util::base64_decode(util::base64_encode(v)) == v);
  }
  CHECK(util::base64_encode(std::vector<std::uint8_t>{'M', 'a', 'n'}) == "TWFu");
  CHECK(util::base64_encode(std::vector<std::uint8_t>{'M'}) == "TQ==");
  CHECK_THROWS_AS(util::base64_decode("TQ="), std::invalid_argument);
  CHECK_THROWS_AS(util::base64_decode("T!=="), std::invalid_argument);
}

TEST_CASE("frames round trip") {
  CHECK(std::get<RegisterFrame>(parse_frame(encode_frame(RegisterFrame{"w1"}))).worker_id == "w1");
  CHECK(std::holds_alternative<NoTaskFrame>(parse_frame(encode_frame(NoTaskFrame{}))));
  CHECK(std::holds_alternative<HeartbeatFrame>(parse_frame(R"({"type":"heartbeat"})")));
  CHECK(std::get<ErrorFrame>(parse_frame(encode_frame(ErrorFrame{"bad"}))).reason == "bad");

  tasks::ComparisonTask t;
  t.task_id = "b1-t000001";
  core::MinutiaeTemplate q{{{5, 6, 1.25, core::MinutiaKind::Bifurcation}}, 64, 64};
  t.queries = std::make_shared<std::vector<tasks::Query>>(std::vector<tasks::Query>{{"q0001", q}});
  t.records.push_back({"r000001", tasks::ImageBytes{0, 1, 2, 250}});
  t.records.push_back({"r000002", q});
  const auto line = encode_frame(TaskFrame{t});
  CHECK(line.find('\n') == std::string::npos);
  const auto back = std::get<TaskFrame>(parse_frame(line)).task;
  CHECK(back.task_id == t.task_id);
  CHECK(*back.queries == *t.queries);
  CHECK(back.records == t.records);

  tasks::SimilarityResult r;
  r.task_id = "b1-t000001";
  r.scores = {{"r000001", "q0001", 0.25}, {"r000002", "q0001", 1.0 / 3.0}};
  r.elapsed_ms = 12.5;
  r.errors = {{"r000001", "bad image"}};
  const auto rb = std::get<ResultFrame>(parse_frame(encode_frame(ResultFrame{r}))).result;
  CHECK(rb.scores == r.scores);  // doubles survive the text round trip bit for bit
  CHECK(rb.elapsed_ms == 12.5);
  CHECK(rb.errors == r.errors);
  CHECK(json::parse(encode_frame(ResultFrame{r})).at("scores")[0].at("queryId") == "q0001");
}

TEST_CASE("malformed frames") {
  CHECK_THROWS_AS(parse_frame("not json"), ProtocolError);
  CHECK_THROWS_AS(parse_frame("[]"), ProtocolError);
  CHECK_THROWS_AS(parse_frame(R"({"type":5})"), ProtocolError);
  CHECK_THROWS_AS(parse_frame(R"({"type":"dance"})"), ProtocolError);
  CHECK_THROWS_AS(parse_frame(R"({"type":"register"})"), ProtocolError);
  CHECK_THROWS_AS(parse_frame(R"({"type":"result","taskId":"x"})"), ProtocolError);
  CHECK_THROWS_AS(parse_frame(R"({"type":"task","taskId":"x","queries":[],"records":[{"recordId":"r"}]})"),
                  ProtocolError);
}

TEST_CASE("session: register on an empty queue gets no_task") {
  test::TempDir dir("proto");
  master::MasterCore core(test::temp_config(dir));
  master::WorkerSession s(core, "peer");
  const auto out = s.on_line(test::register_line("w1"));
  REQUIRE(out.lines.size() == 1);
  CHECK(type_of(out.lines[0]) == "no_task");
  CHECK_FALSE(out.close);
  CHECK(s.registered());
  CHECK(s.on_tick().lines.empty());
  CHECK(s.on_line(R"({"type":"heartbeat"})").lines.empty());
}

TEST_CASE("session: result before register is an error") {
  test::TempDir dir("proto");
  master::MasterCore core(test::temp_config(dir));
  master::WorkerSession s(core, "peer");
  const auto out = s.on_line(R"({"type":"result","taskId":"x","scores":[],"elapsedMs":0})");
  REQUIRE(out.lines.size() == 1);
  CHECK(type_of(out.lines[0]) == "error");
  CHECK(json::parse(out.lines[0]).at("reason") == "expected register before result");
  CHECK(out.close);
  CHECK(s.on_line(test::register_line("w1")).lines.empty());  // closed for good
}

TEST_CASE("session: garbage closes with an error") {
  test::TempDir dir("proto");
  master::MasterCore core(test::temp_config(dir));
  master::WorkerSession s(core, "peer");
  const auto out = s.on_line("{{{");
  CHECK(type_of(out.lines.at(0)) == "error");
  CHECK(out.close);
}

TEST_CASE("session: three-task happy path") {
  test::TempDir dir("proto");
  master::MasterCore core(test::temp_config(dir));
  test::enroll_n(core, 3);
  const auto batch = core.submit_query({{"probe.pgm", test::stroke_pgm()}});
  master::WorkerSession s(core, "peer");

  auto out = s.on_line(test::register_line("w1"));
  std::vector<std::string> seen;
  for (int i = 0; i < 3; ++i) {
    REQUIRE(out.lines.size() == 1);
    REQUIRE(type_of(out.lines[0]) == "task");
    seen.push_back(json::parse(out.lines[0]).at("taskId"));
    CHECK(s.current_task() == seen.back());
    out = s.on_line(test::result_line(out.lines[0], 0.1 * (i + 1)));
  }
  REQUIRE(out.lines.size() == 1);
  CHECK(type_of(out.lines[0]) == "no_task");
  CHECK(seen == std::vector<std::string>{batch + "-t000001", batch + "-t000002", batch + "-t000003"});

  const auto snap = core.job_status(batch);
  REQUIRE(snap.answers.has_value());
  CHECK(snap.progress.done == 3);
  CHECK(snap.answers->at(0).best_record_id == "r000003");
  CHECK(snap.answers->at(0).best_similarity == doctest::Approx(0.3));
  CHECK(snap.answers->at(0).person->name == "Person 3");
  CHECK(core.workers().at(0).tasks_completed == 3);
}

TEST_CASE("session: idle worker gets a task pushed on tick") {
  test::TempDir dir("proto");
  master::MasterCore core(test::temp_config(dir));
  test::enroll_n(core, 1);
  master::WorkerSession s(core, "peer");
  CHECK(type_of(s.on_line(test::register_line("w1")).lines.at(0)) == "no_task");
  core.submit_query({{"p.pgm", test::stroke_pgm()}});
  const auto out = s.on_tick();
  REQUIRE(out.lines.size() == 1);
  CHECK(type_of(out.lines[0]) == "task");
  CHECK(s.on_tick().lines.empty());  // busy now
}

TEST_CASE("session: protocol violations") {
  test::TempDir dir("proto");
  master::MasterCore core(test::temp_config(dir));
  test::enroll_n(core, 2);

  SUBCASE("result with nothing assigned") {
    master::WorkerSession s(core, "peer");
    s.on_line(test::register_line("w1"));
    const auto out = s.on_line(R"({"type":"result","taskId":"x","scores":[],"elapsedMs":0})");
    CHECK(type_of(out.lines.at(0)) == "error");
    CHECK(out.close);
  }
  SUBCASE("result for another task") {
    core.submit_query({{"p.pgm", test::stroke_pgm()}});
    master::WorkerSession s(core, "peer");
    const auto task = s.on_line(test::register_line("w1")).lines.at(0);
    auto j = json::parse(test::result_line(task));
    j["taskId"] = "bogus";
    const auto out = s.on_line(j.dump());
    CHECK(type_of(out.lines.at(0)) == "error");
    CHECK(out.close);
  }
  SUBCASE("incomplete result requeues the task") {
    const auto batch = core.submit_query({{"p.pgm", test::stroke_pgm()}});
    master::WorkerSession s(core, "peer");
    const auto task = s.on_line(test::register_line("w1")).lines.at(0);
    auto j = json::parse(test::result_line(task));
    j["scores"] = json::array();
    const auto out = s.on_line(j.dump());
    CHECK(type_of(out.lines.at(0)) == "error");
    CHECK(out.close);
    CHECK(core.job_status(batch).progress.queued == 2);
  }
  SUBCASE("master-only frames from a worker") {
    master::WorkerSession s(core, "peer");
    s.on_line(test::register_line("w1"));
    const auto out = s.on_line(R"({"type":"no_task"})");
    CHECK(type_of(out.lines.at(0)) == "error");
  }
  SUBCASE("worker error frame closes quietly") {
    master::WorkerSession s(core, "peer");
    s.on_line(test::register_line("w1"));
    const auto out = s.on_line(R"({"type":"error","reason":"bye"})");
    CHECK(out.lines.empty());
    CHECK(out.close);
  }
}

TEST_CASE("session: duplicate live worker id is refused, lost id can rejoin") {
  test::TempDir dir("proto");
  master::MasterCore core(test::temp_config(dir));
  test::enroll_n(core, 1);
  const auto batch = core.submit_query({{"p.pgm", test::stroke_pgm()}});
  master::WorkerSession a(core, "peer-a");
  CHECK(type_of(a.on_line(test::register_line("w1")).lines.at(0)) == "task");

  master::WorkerSession b(core, "peer-b");
  const auto out = b.on_line(test::register_line("w1"));
  CHECK(json::parse(out.lines.at(0)).at("reason") == "duplicate worker id 'w1'");
  CHECK(out.close);
  b.on_disconnect();  // must not touch a's registration
  CHECK(core.status().workers == 1);

  a.on_disconnect();
  CHECK(core.status().workers == 0);
  CHECK(core.job_status(batch).progress.queued == 1);
  master::WorkerSession c(core, "peer-c");
  const auto again = c.on_line(test::register_line("w1"));
  CHECK(type_of(again.lines.at(0)) == "task");
}
