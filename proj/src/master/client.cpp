#include "fpid/master/client.hpp"

#include <fstream>
#include <iterator>
#include <thread>

#include <httplib.h>

namespace fpid::master {

using nlohmann::json;

std::string read_file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

MasterClient::MasterClient(const util::HostPort& address)
    : http_(std::make_unique<httplib::Client>(address.host, address.port)), address_(address.to_string()) {
  http_->set_connection_timeout(std::chrono::seconds(5));
  http_->set_read_timeout(std::chrono::seconds(60));
  http_->set_keep_alive(true);
}

MasterClient::~MasterClient() = default;
MasterClient::MasterClient(MasterClient&&) noexcept = default;
MasterClient& MasterClient::operator=(MasterClient&&) noexcept = default;

namespace {

json check(const httplib::Result& r, const std::string& address) {
  if (!r) throw util::NetError("cannot reach master at " + address + ": " + httplib::to_string(r.error()));
  json body;
  try {
    body = json::parse(r->body);
  } catch (const json::exception&) {
    body = r->body;
  }
  if (r->status < 200 || r->status >= 300) {
    std::string msg = "HTTP " + std::to_string(r->status);
    if (body.is_object() && body.contains("detail")) msg += ": " + body["detail"].get<std::string>();
    throw ApiError(r->status, msg);
  }
  return body;
}

}  // namespace

std::string MasterClient::enroll(const std::string& name, const std::map<std::string, std::string>& metadata,
                                 const std::string& image_bytes, const std::optional<std::string>& photo_bytes) {
  httplib::MultipartFormDataItems items = {
      {"image", image_bytes, "finger.pgm", "image/x-portable-graymap"},
      {"name", name, "", ""},
      {"metadata", json(metadata).dump(), "", "application/json"},
  };
  if (photo_bytes) items.push_back({"photo", *photo_bytes, "photo", "application/octet-stream"});
  return check(http_->Post("/records", items), address_).at("recordId").get<std::string>();
}

std::string MasterClient::submit_query(const std::vector<QueryFile>& images) {
  httplib::MultipartFormDataItems items;
  for (const auto& f : images) items.push_back({"images", f.bytes, f.filename, "image/x-portable-graymap"});
  return check(http_->Post("/queries", items), address_).at("batchId").get<std::string>();
}

json MasterClient::job(const std::string& batch_id, std::size_t tail) {
  return check(http_->Get("/queries/" + batch_id + "?tail=" + std::to_string(tail)), address_);
}

json MasterClient::status() { return check(http_->Get("/status"), address_); }

json MasterClient::workers() { return check(http_->Get("/workers"), address_); }

json MasterClient::wait_for(const std::string& batch_id, std::chrono::milliseconds timeout,
                            std::chrono::milliseconds poll) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    json j = job(batch_id, 0);
    if (j.at("state") == "done") return j;
    if (std::chrono::steady_clock::now() > deadline) {
      throw util::NetError("timed out waiting for batch " + batch_id);
    }
    std::this_thread::sleep_for(poll);
  }
}

}  // namespace fpid::master
