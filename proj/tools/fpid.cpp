// fpid: operator command line for the fingerprint identification cluster.
//
// Exit codes: 0 ok, 1 usage or bad input, 2 network, 3 not found.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fpid/bench/harness.hpp"
#include "fpid/bench/synth.hpp"
#include "fpid/core/error.hpp"
#include "fpid/master/client.hpp"
#include "fpid/master/master_server.hpp"
#include "fpid/store/record_store.hpp"
#include "fpid/worker/worker_node.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNetwork = 2;
constexpr int kExitNotFound = 3;

struct NotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string default_master() {
  const char* env = std::getenv("FPID_MASTER");
  return env && *env ? env : "127.0.0.1:8080";
}

std::string read_input(const fs::path& p) {
  if (!fs::exists(p)) throw NotFound("no such file: " + p.string());
  return fpid::master::read_file_bytes(p);
}

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

// Blocks SIGINT/SIGTERM in every thread and calls `on_signal` from a
// dedicated waiter thread. Must run before other threads are started.
std::thread install_stop_handler(std::function<void()> on_signal) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  std::thread t([set, fn = std::move(on_signal)] {
    int sig = 0;
    sigwait(&set, &sig);
    spdlog::info("signal {} received, shutting down", sig);
    fn();
  });
  t.detach();
  return t;
}

// ---- serve-master ----------------------------------------------------------

struct ServeArgs {
  std::string config;
  std::string store;
  std::string client;
  std::string workers;
  std::optional<std::size_t> pack_size;
  std::optional<double> heartbeat_secs;
  std::optional<double> task_timeout_secs;
  std::optional<double> min_similarity;
  bool cache_templates = false;
  std::string ui_dir;
  std::string port_file;
};

int serve_master(const ServeArgs& a) {
  fpid::master::MasterConfig cfg;
  if (!a.config.empty()) cfg = fpid::master::load_config(a.config);
  if (!a.store.empty()) cfg.store_path = a.store;
  if (!a.client.empty()) cfg.listen_client = fpid::util::parse_host_port(a.client);
  if (!a.workers.empty()) cfg.listen_workers = fpid::util::parse_host_port(a.workers);
  if (a.pack_size) cfg.pack_size = *a.pack_size;
  if (a.heartbeat_secs) cfg.heartbeat_secs = *a.heartbeat_secs;
  if (a.task_timeout_secs) cfg.task_timeout_secs = *a.task_timeout_secs;
  if (a.min_similarity) cfg.min_similarity = *a.min_similarity;
  if (a.cache_templates) cfg.cache_templates = true;
  if (!a.ui_dir.empty()) cfg.ui_dir = a.ui_dir;
  // reuse the JSON validation for flag values too
  cfg = fpid::master::config_from_json(json::object(), cfg);

  fpid::master::MasterServer* server_ptr = nullptr;
  std::mutex m;
  bool stop_requested = false;
  install_stop_handler([&] {
    std::lock_guard lk(m);
    stop_requested = true;
    if (server_ptr) server_ptr->stop();
  });

  fpid::master::MasterServer server(cfg);
  server.start();
  {
    std::lock_guard lk(m);
    server_ptr = &server;
    if (stop_requested) server.stop();
  }
  if (!a.port_file.empty()) {
    const fs::path tmp = a.port_file + ".tmp";
    {
      std::ofstream out(tmp);
      out << json{{"client", server.client_port()}, {"workers", server.worker_port()}}.dump() << '\n';
    }
    fs::rename(tmp, a.port_file);
  }
  server.wait();
  {
    std::lock_guard lk(m);
    server_ptr = nullptr;
  }
  return 0;
}

// ---- worker ----------------------------------------------------------------

struct WorkerArgs {
  std::string master;
  std::string id;
  std::optional<int> simulate_ms;
  double heartbeat_secs = 2.0;
};

int run_worker(const WorkerArgs& a) {
  fpid::worker::WorkerConfig cfg;
  cfg.master = fpid::util::parse_host_port(a.master);
  cfg.worker_id = a.id;
  cfg.simulate_ms = a.simulate_ms;
  cfg.heartbeat_secs = a.heartbeat_secs;
  fpid::worker::WorkerNode node(cfg);
  install_stop_handler([&] { node.stop(); });
  if (node.run() == fpid::worker::WorkerExit::Rejected) {
    std::cerr << "rejected by master: " << node.rejection_reason() << '\n';
    return kExitUsage;
  }
  return 0;
}

// ---- enroll ----------------------------------------------------------------

struct EnrollArgs {
  std::string image;
  std::string name;
  std::vector<std::string> meta;
  std::string photo;
  std::string store;
  std::string master;
  bool json_out = false;
};

int enroll(const EnrollArgs& a) {
  std::map<std::string, std::string> metadata;
  for (const auto& kv : a.meta) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("--meta", "expected KEY=VALUE, got '" + kv + "'");
    metadata[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  const std::string image = read_input(a.image);
  std::optional<std::string> photo;
  if (!a.photo.empty()) photo = read_input(a.photo);

  std::string id;
  if (!a.store.empty()) {
    fpid::store::RecordStore st(a.store);
    std::optional<fpid::store::PhotoUpload> up;
    if (photo) up = fpid::store::PhotoUpload{{photo->begin(), photo->end()}};
    const std::vector<std::uint8_t> bytes(image.begin(), image.end());
    id = st.enroll(a.name, metadata, bytes, up);
  } else {
    fpid::master::MasterClient client(fpid::util::parse_host_port(a.master));
    id = client.enroll(a.name, metadata, image, photo);
  }
  if (a.json_out) print_json({{"recordId", id}, {"name", a.name}});
  else std::cout << id << '\n';
  return 0;
}

// ---- query -----------------------------------------------------------------

struct QueryArgs {
  std::vector<std::string> images;
  bool wait = false;
  double timeout_secs = 600;
  std::string master;
  bool json_out = false;
};

void print_answers(const json& snap) {
  fmt::print("{:<8} {:<28} {:<24} {:<10} {}\n", "query", "source", "name", "record", "similarity");
  for (const auto& a : snap.at("answers")) {
    const bool match = a.at("match").get<bool>();
    fmt::print("{:<8} {:<28} {:<24} {:<10} {:.3f}\n", a.at("queryId").get<std::string>(),
               a.at("source").get<std::string>(), match ? a.at("person").at("name").get<std::string>() : "(no match)",
               match ? a.at("bestRecordId").get<std::string>() : "-", a.at("bestSimilarity").get<double>());
  }
  fmt::print("total running time {:.3f} s\n", snap.at("totalRunningTime").get<double>());
}

int query(const QueryArgs& a) {
  std::vector<fpid::master::QueryFile> files;
  for (const auto& p : a.images) files.push_back({fs::path(p).filename().string(), read_input(p)});
  fpid::master::MasterClient client(fpid::util::parse_host_port(a.master));
  const std::string batch = client.submit_query(files);
  if (!a.wait) {
    if (a.json_out) print_json(client.job(batch));
    else std::cout << batch << '\n';
    return 0;
  }
  const json snap = client.wait_for(batch, std::chrono::milliseconds(static_cast<long>(a.timeout_secs * 1000)));
  if (a.json_out) print_json(snap);
  else print_answers(snap);
  return 0;
}

// ---- status ----------------------------------------------------------------

int status(const std::string& master, bool json_out, bool list_workers) {
  fpid::master::MasterClient client(fpid::util::parse_host_port(master));
  json st = client.status();
  if (list_workers) st["workerList"] = client.workers();
  if (json_out) {
    print_json(st);
    return 0;
  }
  fmt::print("{} records, {} workers\n", st.at("records").get<std::size_t>(), st.at("workers").get<std::size_t>());
  if (st.at("activeJobs").get<std::size_t>() > 0) fmt::print("{} active jobs\n", st.at("activeJobs").get<std::size_t>());
  if (list_workers) {
    for (const auto& w : st["workerList"]) {
      fmt::print("  {:<12} {:<22} {:<5} hb {:.1f}s  tasks {}\n", w.at("workerId").get<std::string>(),
                 w.at("address").get<std::string>(), w.at("state").get<std::string>(),
                 w.at("heartbeatAgeSecs").get<double>(), w.at("tasksCompleted").get<std::size_t>());
    }
  }
  return 0;
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::size_t count = 100;
  std::uint64_t seed = 1;
  std::string enroll_store;
  bool json_out = false;
};

int synth(const SynthArgs& a) {
  fpid::bench::SynthSpec spec;
  spec.count = a.count;
  spec.seed = a.seed;
  const auto ds = fpid::bench::synth_generate(spec, a.out);

  json enrolled = json::object();
  if (!a.enroll_store.empty()) {
    fpid::store::RecordStore st(a.enroll_store);
    for (const auto& e : ds.entries) {
      const std::string bytes = fpid::master::read_file_bytes(ds.root / e.gallery_image);
      const std::vector<std::uint8_t> img(bytes.begin(), bytes.end());
      enrolled[e.id] = st.enroll(e.name, {{"synthId", e.id}}, img);
    }
  }
  if (a.json_out) {
    json j = {{"out", a.out}, {"seed", a.seed}, {"count", ds.entries.size()}};
    if (!a.enroll_store.empty()) j["enrolled"] = enrolled;
    print_json(j);
  } else {
    fmt::print("{} records written to {}\n", ds.entries.size(), a.out);
    if (!a.enroll_store.empty()) fmt::print("enrolled into {}\n", a.enroll_store);
  }
  return 0;
}

// ---- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string experiment;
  int simulate_ms = 50;
  std::size_t reps = 3;
  std::optional<std::size_t> fixed;
  std::vector<std::size_t> points;
  std::string out;
  std::string work_dir;
  bool json_out = false;
};

fs::path self_exe() { return fs::read_symlink("/proc/self/exe"); }

int bench(const BenchArgs& a) {
  fpid::bench::BenchOptions o;
  o.binary = self_exe();
  o.simulate_ms = a.simulate_ms;
  o.reps = a.reps;
  o.work_dir = a.work_dir;

  fpid::bench::BenchResult r;
  if (a.experiment == "workers") {
    r = fpid::bench::bench_workers(o, a.fixed.value_or(140),
                                   a.points.empty() ? std::vector<std::size_t>{1, 2, 4, 8} : a.points);
  } else {
    r = fpid::bench::bench_tasks(o, a.fixed.value_or(8),
                                 a.points.empty() ? std::vector<std::size_t>{20, 60, 100, 140} : a.points);
  }
  const std::string csv = fpid::bench::to_csv(r);
  if (!a.out.empty()) std::ofstream(a.out) << csv;
  if (a.json_out) {
    print_json(fpid::bench::to_json(r));
  } else {
    std::cout << csv;
    if (r.experiment == fpid::bench::Experiment::TasksSweep) {
      try {
        const auto f = fpid::bench::fit_result(r);
        std::cerr << fmt::format("fit: {:.6f} s/task + {:.4f} s, R^2 {:.4f}\n", f.slope, f.intercept, f.r2);
      } catch (const std::invalid_argument&) {
      }
    }
  }
  for (const auto& p : r.points) {
    if (p.failed) std::cerr << "point " << p.x << " failed: " << p.error << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fingerprint identification cluster"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  ServeArgs serve;
  auto* cmd_serve = app.add_subcommand("serve-master", "run the master node");
  cmd_serve->add_option("--config", serve.config, "JSON config file")->check(CLI::ExistingFile);
  cmd_serve->add_option("--store", serve.store, "store directory");
  cmd_serve->add_option("--client", serve.client, "client API listen address HOST:PORT");
  cmd_serve->add_option("--workers", serve.workers, "worker protocol listen address HOST:PORT");
  cmd_serve->add_option("--pack-size", serve.pack_size, "records per task");
  cmd_serve->add_option("--heartbeat-secs", serve.heartbeat_secs);
  cmd_serve->add_option("--task-timeout-secs", serve.task_timeout_secs);
  cmd_serve->add_option("--min-similarity", serve.min_similarity);
  cmd_serve->add_flag("--cache-templates", serve.cache_templates, "ship stored templates instead of images");
  cmd_serve->add_option("--ui-dir", serve.ui_dir, "static files served under /ui");
  cmd_serve->add_option("--port-file", serve.port_file, "write bound ports here as JSON");

  WorkerArgs work;
  auto* cmd_worker = app.add_subcommand("worker", "run a worker node");
  cmd_worker->add_option("--master", work.master, "master worker port HOST:PORT")->required();
  cmd_worker->add_option("--id", work.id, "worker id")->required();
  cmd_worker->add_option("--simulate", work.simulate_ms, "sleep MS per record instead of matching")
      ->check(CLI::NonNegativeNumber);
  cmd_worker->add_option("--heartbeat-secs", work.heartbeat_secs)->check(CLI::PositiveNumber);

  EnrollArgs en;
  en.master = default_master();
  auto* cmd_enroll = app.add_subcommand("enroll", "enroll a person");
  cmd_enroll->add_option("image", en.image, "fingerprint PGM")->required();
  cmd_enroll->add_option("--name", en.name)->required();
  cmd_enroll->add_option("--meta", en.meta, "KEY=VALUE, repeatable");
  cmd_enroll->add_option("--photo", en.photo);
  cmd_enroll->add_option("--store", en.store, "enroll into a local store instead of a running master");
  cmd_enroll->add_option("--master", en.master, "master client address")->envname("FPID_MASTER");
  cmd_enroll->add_flag("--json", en.json_out);

  QueryArgs q;
  q.master = default_master();
  auto* cmd_query = app.add_subcommand("query", "identify fingerprints");
  cmd_query->add_option("images", q.images, "query PGMs")->required();
  cmd_query->add_flag("--wait", q.wait, "poll until done and print the answers");
  cmd_query->add_option("--timeout", q.timeout_secs, "seconds to wait");
  cmd_query->add_option("--master", q.master)->envname("FPID_MASTER");
  cmd_query->add_flag("--json", q.json_out);

  std::string st_master = default_master();
  bool st_json = false, st_workers = false;
  auto* cmd_status = app.add_subcommand("status", "show master status");
  cmd_status->add_option("--master", st_master)->envname("FPID_MASTER");
  cmd_status->add_flag("--workers", st_workers, "list workers");
  cmd_status->add_flag("--json", st_json);

  SynthArgs sy;
  auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic dataset");
  cmd_synth->add_option("--out", sy.out)->required();
  cmd_synth->add_option("--count", sy.count);
  cmd_synth->add_option("--seed", sy.seed);
  cmd_synth->add_option("--enroll-store", sy.enroll_store, "also enroll gallery images into this store");
  cmd_synth->add_flag("--json", sy.json_out);

  BenchArgs be;
  auto* cmd_bench = app.add_subcommand("bench", "scaling benchmarks");
  cmd_bench->add_option("experiment", be.experiment, "workers or tasks")
      ->required()
      ->check(CLI::IsMember({"workers", "tasks"}));
  cmd_bench->add_option("--simulate", be.simulate_ms, "simulated cost per record, ms")->check(CLI::PositiveNumber);
  cmd_bench->add_option("--reps", be.reps)->check(CLI::PositiveNumber);
  cmd_bench->add_option("--fixed", be.fixed, "task count (workers sweep) or worker count (tasks sweep)");
  cmd_bench->add_option("--points", be.points, "sweep values");
  cmd_bench->add_option("--out", be.out, "CSV output file");
  cmd_bench->add_option("--work-dir", be.work_dir);
  cmd_bench->add_flag("--json", be.json_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  auto logger = spdlog::stderr_color_mt("fpid");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*cmd_serve) return serve_master(serve);
    if (*cmd_worker) return run_worker(work);
    if (*cmd_enroll) return enroll(en);
    if (*cmd_query) return query(q);
    if (*cmd_status) return status(st_master, st_json, st_workers);
    if (*cmd_synth) return synth(sy);
    if (*cmd_bench) return bench(be);
  } catch (const NotFound& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNotFound;
  } catch (const fpid::store::NotFoundError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNotFound;
  } catch (const fpid::master::ApiError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.status() == 404 ? kExitNotFound : kExitUsage;
  } catch (const fpid::util::NetError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNetwork;
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
