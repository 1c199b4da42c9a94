#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fpid::util {

class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HostPort {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }
};

/// Parses "HOST:PORT" (or ":PORT"); throws std::invalid_argument.
HostPort parse_host_port(std::string_view text);

/// Owning file descriptor.
class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(o.release()) {}
  Fd& operator=(Fd&& o) noexcept;
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    const int f = fd_;
    fd_ = -1;
    return f;
  }
  void reset();

 private:
  int fd_ = -1;
};

class TcpListener {
 public:
  /// Binds and listens; port 0 picks an ephemeral port.
  explicit TcpListener(const HostPort& addr);

  std::uint16_t port() const { return port_; }
  /// Waits up to `timeout` for a connection.
  std::optional<Fd> accept(std::chrono::milliseconds timeout, std::string* peer = nullptr);
  void close() { fd_.reset(); }

 private:
  Fd fd_;
  std::uint16_t port_ = 0;
};

Fd connect_tcp(const HostPort& addr);

/// Newline-delimited frames over a stream socket. Writes are serialized so
/// several threads may send; reads belong to one thread.
class LineChannel {
 public:
  static constexpr std::size_t kMaxLine = 256u << 20;

  explicit LineChannel(Fd fd) : fd_(std::move(fd)) {}

  enum class ReadStatus { Line, Timeout, Closed };

  /// Reads one line (without the newline). Throws NetError on socket errors
  /// or oversized frames.
  ReadStatus read_line(std::string& line, std::chrono::milliseconds timeout);
  /// Appends '\n'. Returns false if the peer is gone.
  bool send_line(std::string_view line);

  /// Shuts the socket down so a blocked reader wakes up.
  void shutdown();
  int fd() const { return fd_.get(); }

 private:
  Fd fd_;
  std::string buffer_;
  std::mutex write_mutex_;
};

}  // namespace fpid::util
