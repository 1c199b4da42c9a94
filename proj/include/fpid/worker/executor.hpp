#pragma once

#include <optional>

#include "fpid/core/matcher.hpp"
#include "fpid/core/minutiae.hpp"
#include "fpid/tasks/types.hpp"

namespace fpid::worker {

struct ExecOptions {
  /// Benchmark mode: sleep this long per record and report 0.0 scores.
  std::optional<int> simulate_ms;
  core::ExtractionParams extraction;
  core::MatchParams matching;
};

/// Extracts each record's features (unless the payload already is a
/// template) and scores it against every query. A record whose image does
/// not decode scores 0.0 against all queries and is listed in `errors`.
tasks::SimilarityResult execute_task(const tasks::ComparisonTask& task, const ExecOptions& options = {});

}  // namespace fpid::worker
