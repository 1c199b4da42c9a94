#include "fpid/util/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace fpid::util {

HostPort parse_host_port(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos) throw std::invalid_argument("expected HOST:PORT, got '" + std::string(text) + "'");
  HostPort hp;
  const auto host = text.substr(0, colon);
  if (!host.empty()) hp.host = std::string(host);
  const std::string port(text.substr(colon + 1));
  std::size_t used = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(port, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (port.empty() || used != port.size() || v > 65535) {
    throw std::invalid_argument("invalid port in '" + std::string(text) + "'");
  }
  hp.port = static_cast<std::uint16_t>(v);
  return hp;
}

Fd& Fd::operator=(Fd&& o) noexcept {
  if (this != &o) {
    reset();
    fd_ = o.release();
  }
  return *this;
}

void Fd::reset() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

namespace {

sockaddr_in resolve(const HostPort& addr) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(addr.port);
  const std::string host = addr.host == "localhost" ? "127.0.0.1" : addr.host;
  if (host == "0.0.0.0" || host == "*") {
    sa.sin_addr.s_addr = htonl(INADDR_ANY);
  } else if (::inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
      throw NetError("cannot resolve host '" + addr.host + "'");
    }
    sa.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    ::freeaddrinfo(res);
  }
  return sa;
}

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

}  // namespace

TcpListener::TcpListener(const HostPort& addr) {
  fd_ = Fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!fd_.valid()) throw NetError(errno_text("socket"));
  int one = 1;
  ::setsockopt(fd_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in sa = resolve(addr);
  if (::bind(fd_.get(), reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) {
    throw NetError(errno_text(("bind " + addr.to_string()).c_str()));
  }
  if (::listen(fd_.get(), 64) != 0) throw NetError(errno_text("listen"));
  socklen_t len = sizeof sa;
  ::getsockname(fd_.get(), reinterpret_cast<sockaddr*>(&sa), &len);
  port_ = ntohs(sa.sin_port);
}

std::optional<Fd> TcpListener::accept(std::chrono::milliseconds timeout, std::string* peer) {
  if (!fd_.valid()) return std::nullopt;
  pollfd p{fd_.get(), POLLIN, 0};
  const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
  if (rc <= 0) return std::nullopt;
  sockaddr_in sa{};
  socklen_t len = sizeof sa;
  const int c = ::accept4(fd_.get(), reinterpret_cast<sockaddr*>(&sa), &len, SOCK_CLOEXEC);
  if (c < 0) return std::nullopt;
  int one = 1;
  ::setsockopt(c, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  if (peer != nullptr) {
    char buf[INET_ADDRSTRLEN] = {};
    ::inet_ntop(AF_INET, &sa.sin_addr, buf, sizeof buf);
    *peer = std::string(buf) + ":" + std::to_string(ntohs(sa.sin_port));
  }
  return Fd(c);
}

Fd connect_tcp(const HostPort& addr) {
  Fd fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!fd.valid()) throw NetError(errno_text("socket"));
  sockaddr_in sa = resolve(addr);
  if (::connect(fd.get(), reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) {
    throw NetError(errno_text(("connect " + addr.to_string()).c_str()));
  }
  int one = 1;
  ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return fd;
}

LineChannel::ReadStatus LineChannel::read_line(std::string& line, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      line.assign(buffer_, 0, nl);
      buffer_.erase(0, nl + 1);
      return ReadStatus::Line;
    }
    if (buffer_.size() > kMaxLine) throw NetError("frame exceeds maximum size");

    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    pollfd p{fd_.get(), POLLIN, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(std::max<long long>(0, left.count())));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw NetError(errno_text("poll"));
    }
    if (rc == 0) return ReadStatus::Timeout;

    char chunk[64 * 1024];
    const ssize_t n = ::recv(fd_.get(), chunk, sizeof chunk, 0);
    if (n == 0) return ReadStatus::Closed;
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      if (errno == ECONNRESET || errno == ENOTCONN || errno == EBADF) return ReadStatus::Closed;
      throw NetError(errno_text("recv"));
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

bool LineChannel::send_line(std::string_view line) {
  std::lock_guard lock(write_mutex_);
  std::string frame;
  frame.reserve(line.size() + 1);
  frame.append(line);
  frame.push_back('\n');
  std::size_t sent = 0;
  while (sent < frame.size()) {
    const ssize_t n = ::send(fd_.get(), frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

void LineChannel::shutdown() {
  if (fd_.valid()) ::shutdown(fd_.get(), SHUT_RDWR);
}

}  // namespace fpid::util
