#include "fpid/store/record_store.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <mutex>
#include <set>

#include "fpid/core/error.hpp"
#include "fpid/core/template_json.hpp"

namespace fpid::store {

namespace {

constexpr int kManifestVersion = 1;
constexpr const char* kManifestName = "manifest.json";

std::vector<std::uint8_t> read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw StoreError("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& p, std::span<const std::uint8_t> bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw StoreError("cannot write " + p.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw StoreError("short write to " + p.string());
}

std::size_t sequence_of(const std::string& id) {
  if (id.size() < 2 || id[0] != 'r') return 0;
  try {
    return std::stoul(id.substr(1));
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

std::string format_record_id(std::size_t sequence) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "r%06zu", sequence);
  return buf;
}

nlohmann::json manifest_to_json(const StoreManifest& m) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : m.records) {
    nlohmann::json e = {{"recordId", r.record_id},
                        {"name", r.name},
                        {"metadata", r.metadata},
                        {"fingerprintImagePath", r.fingerprint_image_path.generic_string()},
                        {"photoPath", nullptr},
                        {"templatePath", nullptr}};
    if (r.photo_path) e["photoPath"] = r.photo_path->generic_string();
    if (r.template_path) e["templatePath"] = r.template_path->generic_string();
    records.push_back(std::move(e));
  }
  return {{"version", m.version}, {"records", records}};
}

StoreManifest manifest_from_json(const nlohmann::json& j) {
  StoreManifest m;
  if (!j.is_object() || !j.contains("version") || !j.contains("records")) {
    throw StoreError("manifest: missing version or records");
  }
  m.version = j.at("version").get<int>();
  if (m.version != kManifestVersion) {
    throw StoreError("manifest: unsupported version " + std::to_string(m.version));
  }
  std::set<std::string> seen;
  std::size_t index = 0;
  for (const auto& e : j.at("records")) {
    const std::string where = "manifest entry " + std::to_string(index++);
    PersonRecord r;
    try {
      r.record_id = e.at("recordId").get<std::string>();
      r.name = e.at("name").get<std::string>();
      r.metadata = e.value("metadata", Metadata{});
      r.fingerprint_image_path = e.at("fingerprintImagePath").get<std::string>();
      if (e.contains("photoPath") && !e["photoPath"].is_null()) r.photo_path = e["photoPath"].get<std::string>();
      if (e.contains("templatePath") && !e["templatePath"].is_null())
        r.template_path = e["templatePath"].get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
      throw StoreError(where + ": " + ex.what());
    }
    if (r.record_id.empty()) throw StoreError(where + ": empty recordId");
    if (!seen.insert(r.record_id).second) {
      throw StoreError(where + ": duplicate recordId '" + r.record_id + "'");
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

RecordStore::RecordStore(fs::path root, StoreOptions options)
    : root_(std::move(root)), options_(options) {
  fs::create_directories(root_ / "records");
  if (fs::exists(root_ / kManifestName)) {
    load();
  } else {
    const auto text = manifest_to_json(manifest_).dump(2) + "\n";
    write_file(root_ / kManifestName, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }
}

void RecordStore::load() {
  nlohmann::json j;
  try {
    const auto bytes = read_file(root_ / kManifestName);
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw StoreError("manifest.json is not valid JSON: " + std::string(e.what()));
  }
  StoreManifest m = manifest_from_json(j);
  for (auto& r : m.records) {
    if (!fs::exists(root_ / r.fingerprint_image_path)) {
      throw StoreError("record '" + r.record_id + "': missing " + r.fingerprint_image_path.generic_string());
    }
    if (r.photo_path && !fs::exists(root_ / *r.photo_path)) {
      throw StoreError("record '" + r.record_id + "': missing " + r.photo_path->generic_string());
    }
    if (r.template_path) {
      try {
        r.fingerprint_template = core::read_template(root_ / *r.template_path);
      } catch (const core::FormatError& e) {
        throw StoreError("record '" + r.record_id + "': " + e.what());
      }
    }
  }
  manifest_ = std::move(m);
}

std::string RecordStore::enroll(const std::string& name, const Metadata& metadata,
                                std::span<const std::uint8_t> fingerprint_pgm,
                                const std::optional<PhotoUpload>& photo) {
  core::GrayImage image;
  try {
    image = core::decode_pgm(fingerprint_pgm);
  } catch (const std::exception& e) {
    throw EnrollmentError(std::string("fingerprint image rejected: ") + e.what());
  }

  std::unique_lock lock(mutex_);
  std::size_t next = 1;
  for (const auto& r : manifest_.records) next = std::max(next, sequence_of(r.record_id) + 1);

  PersonRecord rec;
  rec.record_id = format_record_id(next);
  rec.name = name;
  rec.metadata = metadata;
  const fs::path rel_dir = fs::path("records") / rec.record_id;
  const fs::path dir = root_ / rel_dir;

  // Leftovers of an interrupted enrollment that never reached the manifest.
  fs::remove_all(dir);
  fs::create_directories(dir);
  fault(EnrollStage::RecordDirCreated);

  rec.fingerprint_image_path = rel_dir / "finger.pgm";
  write_file(root_ / rec.fingerprint_image_path, fingerprint_pgm);
  if (photo) {
    rec.photo_path = rel_dir / "photo";
    write_file(root_ / *rec.photo_path, photo->bytes);
  }
  fault(EnrollStage::ImageWritten);

  if (options_.cache_templates) {
    rec.fingerprint_template = core::extract_minutiae(image);
    rec.template_path = rel_dir / "template.json";
    core::write_template(root_ / *rec.template_path, *rec.fingerprint_template);
  }
  fault(EnrollStage::TemplateWritten);

  StoreManifest updated = manifest_;
  updated.records.push_back(rec);
  const auto text = manifest_to_json(updated).dump(2) + "\n";
  const fs::path tmp = root_ / "manifest.json.tmp";
  write_file(tmp, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  fault(EnrollStage::ManifestTempWritten);
  fs::rename(tmp, root_ / kManifestName);

  manifest_ = std::move(updated);
  fault(EnrollStage::Committed);
  return rec.record_id;
}

const PersonRecord& RecordStore::find(const std::string& record_id) const {
  for (const auto& r : manifest_.records)
    if (r.record_id == record_id) return r;
  throw NotFoundError("no record '" + record_id + "'");
}

PersonRecord RecordStore::get_record(const std::string& record_id) const {
  std::shared_lock lock(mutex_);
  return find(record_id);
}

std::vector<RecordSummary> RecordStore::list_records() const {
  std::shared_lock lock(mutex_);
  std::vector<RecordSummary> out;
  out.reserve(manifest_.records.size());
  for (const auto& r : manifest_.records) out.push_back({r.record_id, r.fingerprint_template.has_value()});
  return out;
}

std::vector<std::string> RecordStore::record_ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  out.reserve(manifest_.records.size());
  for (const auto& r : manifest_.records) out.push_back(r.record_id);
  return out;
}

std::size_t RecordStore::size() const {
  std::shared_lock lock(mutex_);
  return manifest_.records.size();
}

std::vector<std::uint8_t> RecordStore::read_image_bytes(const std::string& record_id) const {
  fs::path p;
  {
    std::shared_lock lock(mutex_);
    p = root_ / find(record_id).fingerprint_image_path;
  }
  return read_file(p);
}

std::optional<std::vector<std::uint8_t>> RecordStore::read_photo_bytes(const std::string& record_id) const {
  fs::path p;
  {
    std::shared_lock lock(mutex_);
    const auto& r = find(record_id);
    if (!r.photo_path) return std::nullopt;
    p = root_ / *r.photo_path;
  }
  return read_file(p);
}

}  // namespace fpid::store
