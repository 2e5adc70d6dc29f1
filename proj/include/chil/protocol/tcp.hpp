// Copyright 2026 The chil-cosim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

// TCP transport over POSIX sockets. The plant listens, the controller dials.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <utility>

#include "chil/error.hpp"
#include "chil/protocol/channel.hpp"

namespace chil::protocol {

struct Endpoint {
  std::string host = "127.0.0.1";
  unsigned short port = 0;
};

/// Parses "host:port" or ":port" or a bare port.
inline Endpoint parse_endpoint(std::string_view s) {
  Endpoint ep;
  std::string_view port = s;
  if (auto c = s.rfind(':'); c != std::string_view::npos) {
    if (c > 0) ep.host = std::string(s.substr(0, c));
    port = s.substr(c + 1);
  }
  if (port.empty()) throw UsageError("address \"" + std::string(s) + "\": missing port");
  unsigned long p = 0;
  for (char ch : port) {
    if (ch < '0' || ch > '9') throw UsageError("address \"" + std::string(s) + "\": bad port");
    p = p * 10 + static_cast<unsigned long>(ch - '0');
    if (p > 65535) throw UsageError("address \"" + std::string(s) + "\": port out of range");
  }
  ep.port = static_cast<unsigned short>(p);
  return ep;
}

namespace detail {

inline std::string errno_text(std::string_view what) { return std::string(what) + ": " + std::strerror(errno); }

inline int poll_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left <= 0 ? 0 : static_cast<int>(std::min<long long>(left, 1 << 30));
}

inline sockaddr_in resolve(const Endpoint& ep) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (int rc = ::getaddrinfo(ep.host.c_str(), nullptr, &hints, &res); rc != 0)
    throw IoError("resolve " + ep.host + ": " + ::gai_strerror(rc));
  sockaddr_in sa{};
  std::memcpy(&sa, res->ai_addr, sizeof(sa));
  ::freeaddrinfo(res);
  sa.sin_port = htons(ep.port);
  return sa;
}

}  // namespace detail

class TcpChannel final : public LineChannel {
 public:
  explicit TcpChannel(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }
  ~TcpChannel() override {
    if (fd_ >= 0) ::close(fd_);
  }
  TcpChannel(const TcpChannel&) = delete;
  TcpChannel& operator=(const TcpChannel&) = delete;

  void send(std::string_view bytes) override {
    std::lock_guard lk(send_mu_);
    while (!bytes.empty()) {
      const ssize_t n = ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw IoError(detail::errno_text("tcp send"));
      }
      bytes.remove_prefix(static_cast<std::size_t>(n));
    }
  }

  Received receive(Clock::duration timeout) override {
    Received r;
    const auto deadline = Clock::now() + timeout;
    while (true) {
      if (detail::take_line(buf_, r.line)) {
        r.status = Received::Status::line;
        return r;
      }
      if (eof_) {
        r.status = buf_.empty() ? Received::Status::closed : Received::Status::truncated;
        r.line = std::exchange(buf_, {});
        return r;
      }
      pollfd p{fd_, POLLIN, 0};
      const int rc = ::poll(&p, 1, detail::poll_ms(deadline));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw IoError(detail::errno_text("tcp poll"));
      }
      if (rc == 0) {
        r.status = Received::Status::timeout;
        return r;
      }
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == ECONNRESET) {
          eof_ = true;
          continue;
        }
        throw IoError(detail::errno_text("tcp recv"));
      }
      if (n == 0)
        eof_ = true;
      else
        buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  void close() override {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
  }

 private:
  int fd_;
  std::mutex send_mu_;
  std::string buf_;
  bool eof_ = false;
};

class TcpListener {
 public:
  explicit TcpListener(const Endpoint& ep) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw IoError(detail::errno_text("socket"));
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in sa = detail::resolve(ep);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) < 0) {
      const std::string msg = detail::errno_text("bind " + ep.host + ":" + std::to_string(ep.port));
      ::close(fd_);
      throw IoError(msg);
    }
    if (::listen(fd_, 1) < 0) {
      const std::string msg = detail::errno_text("listen");
      ::close(fd_);
      throw IoError(msg);
    }
    socklen_t len = sizeof(sa);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &len);
    port_ = ntohs(sa.sin_port);
  }
  ~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
  }
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  /// Actual bound port (useful when asked for port 0).
  unsigned short port() const { return port_; }

  std::unique_ptr<TcpChannel> accept(Clock::duration timeout) {
    const auto deadline = Clock::now() + timeout;
    while (true) {
      pollfd p{fd_, POLLIN, 0};
      const int rc = ::poll(&p, 1, detail::poll_ms(deadline));
      if (rc < 0 && errno == EINTR) continue;
      if (rc < 0) throw IoError(detail::errno_text("poll"));
      if (rc == 0) throw PeerTimeoutError("no controller connected before timeout");
      const int c = ::accept(fd_, nullptr, nullptr);
      if (c < 0) {
        if (errno == EINTR) continue;
        throw IoError(detail::errno_text("accept"));
      }
      return std::make_unique<TcpChannel>(c);
    }
  }

 private:
  int fd_ = -1;
  unsigned short port_ = 0;
};

/// Connects, retrying until the deadline so the dialer may start first.
inline std::unique_ptr<TcpChannel> tcp_connect(const Endpoint& ep, Clock::duration timeout) {
  const auto deadline = Clock::now() + timeout;
  const sockaddr_in sa = detail::resolve(ep);
  while (true) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw IoError(detail::errno_text("socket"));
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&sa), sizeof(sa)) == 0) return std::make_unique<TcpChannel>(fd);
    const std::string msg = detail::errno_text("connect " + ep.host + ":" + std::to_string(ep.port));
    ::close(fd);
    if (Clock::now() >= deadline) throw IoError(msg);
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

}  // namespace chil::protocol
