#include "fpid/bench/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fpid/bench/cluster.hpp"

namespace fpid::bench {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Experiment e) { return e == Experiment::WorkersSweep ? "workers" : "tasks"; }

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double sample_stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (v.size() - 1));
}

namespace {

fs::path scratch_dir(const BenchOptions& o) {
  if (!o.work_dir.empty()) return o.work_dir;
  std::random_device rd;
  return fs::temp_directory_path() / ("fpid-bench-" + std::to_string(rd()));
}

}  // namespace

BenchPoint run_point(const BenchOptions& options, std::size_t workers, std::size_t tasks) {
  BenchPoint pt;
  const fs::path dir = scratch_dir(options) / ("w" + std::to_string(workers) + "-t" + std::to_string(tasks));
  fs::remove_all(dir);
  fs::create_directories(dir);
  try {
    populate_blank_store(dir / "store", tasks);

    ClusterOptions co;
    co.binary = options.binary;
    co.store = dir / "store";
    co.work_dir = dir;
    co.workers = workers;
    co.simulate_ms = options.simulate_ms;
    co.heartbeat_secs = options.heartbeat_secs;
    LocalCluster cluster(co);

    const std::vector<master::QueryFile> query = {{"bench.pgm", blank_pgm()}};
    for (std::size_t r = 0; r < options.reps; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      const std::string batch = cluster.client().submit_query(query);
      json snap;
      while (true) {
        snap = cluster.client().job(batch, 0);
        if (snap.at("state") == "done") break;
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
      }
      const double client = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      pt.samples.push_back(snap.at("totalRunningTime").get<double>());
      pt.client_seconds.push_back(client);
    }
    pt.repetitions = pt.samples.size();
    pt.run_seconds = median(pt.samples);
    pt.stddev = sample_stddev(pt.samples);
  } catch (const std::exception& e) {
    pt.failed = true;
    pt.error = e.what();
  }
  fs::remove_all(dir / "store");
  return pt;
}

namespace {

json config_json(const BenchOptions& o, Experiment e, std::size_t fixed) {
  return {{"experiment", to_string(e)},
          {e == Experiment::WorkersSweep ? "tasks" : "workers", fixed},
          {"simulateMs", o.simulate_ms},
          {"reps", o.reps},
          {"heartbeatSecs", o.heartbeat_secs}};
}

template <typename F>
BenchResult sweep(Experiment e, std::vector<std::size_t> xs, F&& point) {
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  BenchResult r;
  r.experiment = e;
  for (std::size_t x : xs) {
    BenchPoint p = point(x);
    p.x = x;
    r.points.push_back(std::move(p));
  }
  return r;
}

}  // namespace

BenchResult bench_workers(const BenchOptions& options, std::size_t tasks, std::vector<std::size_t> workers) {
  const BenchOptions o{options.binary, scratch_dir(options), options.simulate_ms, options.reps, options.heartbeat_secs};
  BenchResult r = sweep(Experiment::WorkersSweep, std::move(workers),
                        [&](std::size_t w) { return run_point(o, w, tasks); });
  r.config = config_json(o, r.experiment, tasks);
  if (options.work_dir.empty()) fs::remove_all(o.work_dir);
  return r;
}

BenchResult bench_tasks(const BenchOptions& options, std::size_t workers, std::vector<std::size_t> tasks) {
  const BenchOptions o{options.binary, scratch_dir(options), options.simulate_ms, options.reps, options.heartbeat_secs};
  BenchResult r = sweep(Experiment::TasksSweep, std::move(tasks),
                        [&](std::size_t t) { return run_point(o, workers, t); });
  r.config = config_json(o, r.experiment, workers);
  if (options.work_dir.empty()) fs::remove_all(o.work_dir);
  return r;
}

std::string to_csv(const BenchResult& r) {
  std::ostringstream os;
  os << to_string(r.experiment) << ",run_seconds,stddev\n";
  os.setf(std::ios::fixed);
  os.precision(6);
  for (const auto& p : r.points) {
    os << p.x << ',';
    if (!p.failed) os << p.run_seconds << ',' << p.stddev;
    else os << ',';
    os << '\n';
  }
  return os.str();
}

json to_json(const BenchResult& r) {
  json points = json::array();
  for (const auto& p : r.points) {
    json j = {{"x", p.x}, {"failed", p.failed}};
    if (p.failed) {
      j["error"] = p.error;
    } else {
      j["runSeconds"] = p.run_seconds;
      j["stddev"] = p.stddev;
      j["repetitions"] = p.repetitions;
      j["samples"] = p.samples;
      j["clientSeconds"] = p.client_seconds;
    }
    points.push_back(std::move(j));
  }
  json out = {{"experiment", to_string(r.experiment)}, {"config", r.config}, {"points", points}};
  if (r.experiment == Experiment::TasksSweep) {
    try {
      const LinearFit f = fit_result(r);
      out["fit"] = {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}};
    } catch (const std::invalid_argument&) {
    }
  }
  return out;
}

LinearFit fit_linear(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("fit: need at least two points");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("fit: x values are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    sse += e * e;
  }
  f.r2 = syy == 0 ? 1.0 : 1.0 - sse / syy;
  return f;
}

LinearFit fit_result(const BenchResult& r) {
  std::vector<double> x, y;
  for (const auto& p : r.points) {
    if (p.failed || p.x == 0) continue;
    x.push_back(static_cast<double>(p.x));
    y.push_back(p.run_seconds);
  }
  return fit_linear(x, y);
}

double speedup(const BenchResult& r, std::size_t from, std::size_t to) {
  auto find = [&](std::size_t x) -> const BenchPoint& {
    for (const auto& p : r.points) {
      if (p.x == x) {
        if (p.failed) throw std::invalid_argument("point " + std::to_string(x) + " failed: " + p.error);
        return p;
      }
    }
    throw std::invalid_argument("no point at " + std::to_string(x));
  };
  return find(from).run_seconds / find(to).run_seconds;
}

}  // namespace fpid::bench
