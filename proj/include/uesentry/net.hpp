#pragma once

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <optional>
#include <string>
#include <utility>

#include "uesentry/result.hpp"

namespace uesentry {

using SteadyClock = std::chrono::steady_clock;
using TimePoint = SteadyClock::time_point;

namespace detail {

inline int remaining_ms(TimePoint deadline) {
  const auto now = SteadyClock::now();
  if (now >= deadline) return 0;
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
  return ms > INT32_MAX ? INT32_MAX : static_cast<int>(ms);
}

}  // namespace detail

/// Blocking TCP connection with poll-based deadlines.
class TcpConn {
 public:
  TcpConn() = default;
  explicit TcpConn(int fd) : fd_(fd) {}
  TcpConn(const TcpConn&) = delete;
  TcpConn& operator=(const TcpConn&) = delete;
  TcpConn(TcpConn&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  TcpConn& operator=(TcpConn&& other) noexcept {
    if (this != &other) {
      close();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  ~TcpConn() { close(); }

  bool valid() const { return fd_ >= 0; }

  static Result<TcpConn, NetError> connect(const std::string& host, std::uint16_t port, int timeout_ms) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) return NetError{std::string("socket: ") + std::strerror(errno)};
    TcpConn conn(fd);

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
      return NetError{"invalid address: " + host};

    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
    if (rc != 0 && errno != EINPROGRESS)
      return NetError{std::string("connect: ") + connect_error_text(errno)};
    if (rc != 0) {
      pollfd pfd{fd, POLLOUT, 0};
      rc = ::poll(&pfd, 1, timeout_ms);
      if (rc == 0) return NetError{"connect: timed out"};
      if (rc < 0) return NetError{std::string("connect: ") + std::strerror(errno)};
      int err = 0;
      socklen_t len = sizeof(err);
      ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
      if (err != 0) return NetError{std::string("connect: ") + connect_error_text(err)};
    }
    ::fcntl(fd, F_SETFL, flags);
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return conn;
  }

  /// Reads whatever is available before the deadline. Returns 0 bytes only
  /// on clean EOF; a deadline hit yields the "timed out" error.
  Result<std::size_t, NetError> read_some(std::uint8_t* buf, std::size_t cap, TimePoint deadline) {
    pollfd pfd{fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, detail::remaining_ms(deadline));
    if (rc == 0) return NetError{"read: timed out"};
    if (rc < 0) return NetError{std::string("poll: ") + std::strerror(errno)};
    const ssize_t n = ::recv(fd_, buf, cap, 0);
    if (n < 0) return NetError{std::string("recv: ") + std::strerror(errno)};
    return static_cast<std::size_t>(n);
  }

  Result<Unit, NetError> write_all(const std::uint8_t* buf, std::size_t len) {
    std::size_t off = 0;
    while (off < len) {
      const ssize_t n = ::send(fd_, buf + off, len - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        return NetError{std::string("send: ") + std::strerror(errno)};
      }
      off += static_cast<std::size_t>(n);
    }
    return Unit{};
  }

  Result<Unit, NetError> write_all(const Bytes& data) { return write_all(data.data(), data.size()); }

  void close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  static std::string connect_error_text(int err) {
    if (err == ECONNREFUSED) return "connection refused";
    return std::strerror(err);
  }

  int fd_ = -1;
};

/// Listening socket; accept() polls so a server loop can observe a stop flag.
class TcpListener {
 public:
  TcpListener() = default;
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  TcpListener(TcpListener&& other) noexcept
      : fd_(std::exchange(other.fd_, -1)), port_(std::exchange(other.port_, 0)) {}
  TcpListener& operator=(TcpListener&& other) noexcept {
    if (this != &other) {
      close();
      fd_ = std::exchange(other.fd_, -1);
      port_ = std::exchange(other.port_, 0);
    }
    return *this;
  }
  ~TcpListener() { close(); }

  /// Binds 127.0.0.1:port; port 0 picks an ephemeral port (see port()).
  static Result<TcpListener, NetError> bind(std::uint16_t port) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) return NetError{std::string("socket: ") + std::strerror(errno)};
    TcpListener lis;
    lis.fd_ = fd;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
      return NetError{std::string("bind: ") + std::strerror(errno)};
    if (::listen(fd, 64) != 0) return NetError{std::string("listen: ") + std::strerror(errno)};
    socklen_t len = sizeof(addr);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    lis.port_ = ntohs(addr.sin_port);
    return lis;
  }

  std::uint16_t port() const { return port_; }

  /// Accepts the next connection, polling in 100 ms slices so `stop` is
  /// honored promptly. Returns nullopt when stopped or the listener closed.
  std::optional<TcpConn> accept(const std::atomic<bool>& stop) {
    while (!stop.load()) {
      pollfd pfd{fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, 100);
      if (rc < 0) {
        if (errno == EINTR) continue;
        return std::nullopt;
      }
      if (rc == 0) continue;
      const int conn = ::accept(fd_, nullptr, nullptr);
      if (conn < 0) {
        if (errno == EINTR || errno == ECONNABORTED) continue;
        return std::nullopt;
      }
      int one = 1;
      ::setsockopt(conn, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return TcpConn(conn);
    }
    return std::nullopt;
  }

  void close() {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace uesentry
