#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpid/util/net.hpp"

namespace httplib {
class Client;
}

namespace fpid::master {

/// Non-2xx reply from the master; carries the HTTP status and error body.
class ApiError : public std::runtime_error {
 public:
  ApiError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct QueryFile {
  std::string filename;
  std::string bytes;
};

/// Blocking HTTP client for the master's client API. Network failures raise
/// util::NetError, API errors raise ApiError.
class MasterClient {
 public:
  explicit MasterClient(const util::HostPort& address);
  ~MasterClient();
  MasterClient(MasterClient&&) noexcept;
  MasterClient& operator=(MasterClient&&) noexcept;

  std::string enroll(const std::string& name, const std::map<std::string, std::string>& metadata,
                     const std::string& image_bytes, const std::optional<std::string>& photo_bytes = std::nullopt);
  std::string submit_query(const std::vector<QueryFile>& images);
  nlohmann::json job(const std::string& batch_id, std::size_t tail = 50);
  nlohmann::json status();
  nlohmann::json workers();

  /// Polls job() until its state is "done" or `timeout` passes.
  nlohmann::json wait_for(const std::string& batch_id, std::chrono::milliseconds timeout,
                          std::chrono::milliseconds poll = std::chrono::milliseconds(20));

 private:
  std::unique_ptr<httplib::Client> http_;
  std::string address_;
};

std::string read_file_bytes(const std::filesystem::path& p);

}  // namespace fpid::master
