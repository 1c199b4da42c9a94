#include "fpid/worker/executor.hpp"

#include <chrono>
#include <thread>

namespace fpid::worker {

tasks::SimilarityResult execute_task(const tasks::ComparisonTask& task, const ExecOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  tasks::SimilarityResult result;
  result.task_id = task.task_id;
  static const std::vector<tasks::Query> kNoQueries;
  const auto& queries = task.queries ? *task.queries : kNoQueries;

  for (const auto& rec : task.records) {
    if (options.simulate_ms) {
      std::this_thread::sleep_for(std::chrono::milliseconds(*options.simulate_ms));
      for (const auto& q : queries) result.scores.push_back({rec.record_id, q.query_id, 0.0});
      continue;
    }

    std::optional<core::MinutiaeTemplate> features;
    if (const auto* t = std::get_if<core::MinutiaeTemplate>(&rec.payload)) {
      features = *t;
    } else {
      try {
        features = core::extract_minutiae(core::decode_pgm(std::get<tasks::ImageBytes>(rec.payload)),
                                          options.extraction);
      } catch (const std::exception& e) {
        result.errors.push_back({rec.record_id, e.what()});
      }
    }
    for (const auto& q : queries) {
      const double s = features ? core::match_templates(q.features, *features, options.matching) : 0.0;
      result.scores.push_back({rec.record_id, q.query_id, s});
    }
  }
  result.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace fpid::worker
