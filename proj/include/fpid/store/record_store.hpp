#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpid/core/image.hpp"
#include "fpid/core/minutiae.hpp"

namespace fpid::store {

namespace fs = std::filesystem;

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Enrollment rejected before anything was written.
class EnrollmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Metadata = std::map<std::string, std::string>;

/// A fingerprint bound to personal information. Paths are relative to the
/// store root.
struct PersonRecord {
  std::string record_id;
  std::string name;
  Metadata metadata;
  std::optional<fs::path> photo_path;
  fs::path fingerprint_image_path;
  std::optional<fs::path> template_path;
  std::optional<core::MinutiaeTemplate> fingerprint_template;

  friend bool operator==(const PersonRecord&, const PersonRecord&) = default;
};

struct RecordSummary {
  std::string record_id;
  bool has_template = false;
};

struct StoreManifest {
  int version = 1;
  std::vector<PersonRecord> records;  // templates are not part of the manifest
};

nlohmann::json manifest_to_json(const StoreManifest& m);
/// Validates the schema, version and id uniqueness; errors name the entry.
StoreManifest manifest_from_json(const nlohmann::json& j);

struct StoreOptions {
  /// Extract and persist templates at enrollment.
  bool cache_templates = false;
};

struct PhotoUpload {
  std::vector<std::uint8_t> bytes;
};

/// Points in an enrollment at which the fault hook fires.
enum class EnrollStage { RecordDirCreated, ImageWritten, TemplateWritten, ManifestTempWritten, Committed };

/// Directory-backed person store:
///
///   <root>/manifest.json
///   <root>/records/<id>/finger.pgm
///   <root>/records/<id>/photo          (optional)
///   <root>/records/<id>/template.json  (optional)
///
/// The manifest is replaced by write-temp-then-rename, so an interrupted
/// enrollment leaves the previous manifest intact. Writers serialize;
/// readers run concurrently.
class RecordStore {
 public:
  /// Opens `root`, creating an empty store if it has no manifest yet.
  explicit RecordStore(fs::path root, StoreOptions options = {});

  const fs::path& root() const { return root_; }
  const StoreOptions& options() const { return options_; }

  std::string enroll(const std::string& name, const Metadata& metadata,
                     std::span<const std::uint8_t> fingerprint_pgm,
                     const std::optional<PhotoUpload>& photo = std::nullopt);

  PersonRecord get_record(const std::string& record_id) const;
  std::vector<RecordSummary> list_records() const;
  std::vector<std::string> record_ids() const;
  std::size_t size() const;

  std::vector<std::uint8_t> read_image_bytes(const std::string& record_id) const;
  std::optional<std::vector<std::uint8_t>> read_photo_bytes(const std::string& record_id) const;

  /// Test hook; an exception thrown from it aborts the enrollment at that point.
  void set_fault_hook(std::function<void(EnrollStage)> hook) { fault_hook_ = std::move(hook); }

 private:
  void load();
  void fault(EnrollStage s) const {
    if (fault_hook_) fault_hook_(s);
  }
  const PersonRecord& find(const std::string& record_id) const;

  fs::path root_;
  StoreOptions options_;
  mutable std::shared_mutex mutex_;
  StoreManifest manifest_;
  std::function<void(EnrollStage)> fault_hook_;
};

std::string format_record_id(std::size_t sequence);

}  // namespace fpid::store
