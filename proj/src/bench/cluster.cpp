#include "fpid/bench/cluster.hpp"

#include <csignal>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "fpid/core/image.hpp"
#include "fpid/store/record_store.hpp"

namespace fpid::bench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

json read_port_file(const fs::path& p, std::chrono::milliseconds timeout, ChildProcess& master) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (std::chrono::steady_clock::now() < deadline) {
    if (fs::exists(p)) {
      std::ifstream in(p);
      try {
        return json::parse(in);
      } catch (const json::exception&) {
        // half-written; the master renames into place so this is rare
      }
    }
    if (!master.running()) throw std::runtime_error("master exited during startup");
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  throw std::runtime_error("master did not publish its ports in time");
}

}  // namespace

LocalCluster::LocalCluster(ClusterOptions options) : options_(std::move(options)) {
  fs::create_directories(options_.work_dir);
  const fs::path port_file = options_.work_dir / "ports.json";
  fs::remove(port_file);

  std::vector<std::string> argv = {options_.binary.string(),
                                   "serve-master",
                                   "--store",
                                   options_.store.string(),
                                   "--client",
                                   "127.0.0.1:0",
                                   "--workers",
                                   "127.0.0.1:0",
                                   "--pack-size",
                                   std::to_string(options_.pack_size),
                                   "--heartbeat-secs",
                                   format_double(options_.heartbeat_secs),
                                   "--task-timeout-secs",
                                   format_double(options_.task_timeout_secs),
                                   "--port-file",
                                   port_file.string()};
  if (options_.cache_templates) argv.push_back("--cache-templates");
  master_ = ChildProcess(argv, options_.work_dir / "master.log");

  const json ports = read_port_file(port_file, options_.startup_timeout, master_);
  client_address_ = {"127.0.0.1", ports.at("client").get<std::uint16_t>()};
  worker_port_ = ports.at("workers").get<std::uint16_t>();
  client_ = std::make_unique<master::MasterClient>(client_address_);

  const std::string master_addr = "127.0.0.1:" + std::to_string(worker_port_);
  for (std::size_t i = 0; i < options_.workers; ++i) {
    std::vector<std::string> wargv = {options_.binary.string(), "worker", "--master", master_addr,
                                      "--id", worker_id(i), "--heartbeat-secs",
                                      format_double(options_.heartbeat_secs)};
    if (options_.simulate_ms) {
      wargv.push_back("--simulate");
      wargv.push_back(std::to_string(*options_.simulate_ms));
    }
    workers_.emplace_back(wargv, options_.work_dir / (worker_id(i) + ".log"));
  }
  wait_for_workers(options_.workers, options_.startup_timeout);
}

LocalCluster::~LocalCluster() { shutdown(); }

void LocalCluster::shutdown() {
  for (auto& w : workers_) w.signal(SIGTERM);
  for (auto& w : workers_) w.terminate();
  master_.terminate();
}

void LocalCluster::wait_for_workers(std::size_t n, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    try {
      if (client_->status().at("workers").get<std::size_t>() == n) return;
    } catch (const util::NetError&) {
    }
    if (std::chrono::steady_clock::now() > deadline) {
      throw std::runtime_error("workers did not register in time (wanted " + std::to_string(n) + ")");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
}

std::string blank_pgm(int size) {
  const auto bytes = core::encode_pgm(core::GrayImage(size, size, 255));
  return {bytes.begin(), bytes.end()};
}

void populate_blank_store(const fs::path& root, std::size_t n) {
  store::RecordStore st(root);
  const std::string img = blank_pgm();
  const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(img.data()), img.size());
  for (std::size_t i = st.size(); i < n; ++i) st.enroll("bench " + std::to_string(i + 1), {}, bytes);
}

}  // namespace fpid::bench
