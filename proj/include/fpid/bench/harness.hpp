#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace fpid::bench {

enum class Experiment { WorkersSweep, TasksSweep };
std::string_view to_string(Experiment e);

struct BenchPoint {
  std::size_t x = 0;  // workers or tasks
  double run_seconds = 0.0;  // median of the samples
  std::size_t repetitions = 0;
  double stddev = 0.0;
  std::vector<double> samples;         // master-reported total running time
  std::vector<double> client_seconds;  // submit to observed completion
  bool failed = false;
  std::string error;
};

struct BenchResult {
  Experiment experiment = Experiment::WorkersSweep;
  std::vector<BenchPoint> points;  // ascending x
  nlohmann::json config;
};

struct BenchOptions {
  std::filesystem::path binary;
  /// Scratch space for stores and logs; a temp directory when empty.
  std::filesystem::path work_dir;
  int simulate_ms = 50;
  std::size_t reps = 3;
  double heartbeat_secs = 2.0;
};

/// Spawns a fresh master plus `workers` simulated workers against a store of
/// `tasks` records and times `reps` single-query batches.
BenchPoint run_point(const BenchOptions& options, std::size_t workers, std::size_t tasks);

BenchResult bench_workers(const BenchOptions& options, std::size_t tasks = 140,
                          std::vector<std::size_t> workers = {1, 2, 4, 8});
BenchResult bench_tasks(const BenchOptions& options, std::size_t workers = 8,
                        std::vector<std::size_t> tasks = {20, 60, 100, 140});

/// "workers,run_seconds,stddev" or "tasks,run_seconds,stddev"; failed points
/// keep their row with empty timing columns.
std::string to_csv(const BenchResult& r);
nlohmann::json to_json(const BenchResult& r);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares; needs at least two distinct x values.
LinearFit fit_linear(std::span<const double> x, std::span<const double> y);
/// Fit over successful points with x > 0.
LinearFit fit_result(const BenchResult& r);

/// run_seconds(from) / run_seconds(to); throws if either point is missing or failed.
double speedup(const BenchResult& r, std::size_t from, std::size_t to);

double median(std::vector<double> v);
/// Sample standard deviation; 0 for fewer than two values.
double sample_stddev(std::span<const double> v);

}  // namespace fpid::bench
