#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fpid/core/minutiae.hpp"

namespace fpid::tasks {

struct Query {
  std::string query_id;
  core::MinutiaeTemplate features;

  friend bool operator==(const Query&, const Query&) = default;
};

/// Query templates extracted master-side, shared by every task of the batch.
struct QueryBatch {
  std::string batch_id;
  std::vector<Query> queries;

  /// Throws std::invalid_argument when empty or when query ids repeat.
  void validate() const;
};

using ImageBytes = std::vector<std::uint8_t>;

struct RecordPayload {
  std::string record_id;
  std::variant<ImageBytes, core::MinutiaeTemplate> payload;

  friend bool operator==(const RecordPayload&, const RecordPayload&) = default;
};

struct ComparisonTask {
  std::string task_id;
  std::string batch_id;
  std::shared_ptr<const std::vector<Query>> queries;
  std::vector<RecordPayload> records;
};

struct Score {
  std::string record_id;
  std::string query_id;
  double similarity = 0.0;

  friend bool operator==(const Score&, const Score&) = default;
};

struct RecordError {
  std::string record_id;
  std::string message;

  friend bool operator==(const RecordError&, const RecordError&) = default;
};

struct SimilarityResult {
  std::string task_id;
  std::vector<Score> scores;
  std::string worker_id;
  double elapsed_ms = 0.0;
  std::vector<RecordError> errors;
};

struct PersonInfo {
  std::string name;
  std::map<std::string, std::string> metadata;
  std::optional<std::string> photo;
};

/// Best record for one query. `best_record_id` is empty when nothing
/// qualified (empty database, or below the similarity floor).
struct MatchAnswer {
  std::string query_id;
  std::optional<std::string> best_record_id;
  double best_similarity = 0.0;
  std::optional<PersonInfo> person;
};

}  // namespace fpid::tasks
