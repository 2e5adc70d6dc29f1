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

// Byte transports carrying newline-terminated records.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <utility>

#include "chil/error.hpp"

namespace chil::protocol {

using Clock = std::chrono::steady_clock;

struct Received {
  enum class Status { line, timeout, closed, truncated };
  Status status = Status::timeout;
  std::string line;  // includes the trailing newline when status == line
};

class LineChannel {
 public:
  virtual ~LineChannel() = default;
  /// Writes raw bytes. Callers normally pass exactly one encoded record.
  virtual void send(std::string_view bytes) = 0;
  virtual Received receive(Clock::duration timeout) = 0;
  /// Signals end of stream to the peer. Idempotent.
  virtual void close() = 0;
};

namespace detail {

// Pulls one line out of buf if a newline is present.
inline bool take_line(std::string& buf, std::string& out) {
  const auto nl = buf.find('\n');
  if (nl == std::string::npos) return false;
  out.assign(buf, 0, nl + 1);
  buf.erase(0, nl + 1);
  return true;
}

struct Pipe {
  std::mutex mu;
  std::condition_variable cv;
  std::string buf;
  bool closed = false;
};

}  // namespace detail

/// One end of an in-memory duplex pipe.
class InProcChannel final : public LineChannel {
 public:
  InProcChannel(std::shared_ptr<detail::Pipe> in, std::shared_ptr<detail::Pipe> out)
      : in_(std::move(in)), out_(std::move(out)) {}
  ~InProcChannel() override { close(); }

  void send(std::string_view bytes) override {
    {
      std::lock_guard lk(out_->mu);
      if (out_->closed) throw IoError("in-process channel: send after close");
      out_->buf.append(bytes);
    }
    out_->cv.notify_all();
  }

  Received receive(Clock::duration timeout) override {
    std::unique_lock lk(in_->mu);
    Received r;
    const auto deadline = Clock::now() + timeout;
    while (true) {
      if (detail::take_line(in_->buf, r.line)) {
        r.status = Received::Status::line;
        return r;
      }
      if (in_->closed) {
        if (in_->buf.empty()) {
          r.status = Received::Status::closed;
        } else {
          r.status = Received::Status::truncated;
          r.line = std::exchange(in_->buf, {});
        }
        return r;
      }
      if (in_->cv.wait_until(lk, deadline) == std::cv_status::timeout && in_->buf.find('\n') == std::string::npos &&
          !in_->closed) {
        r.status = Received::Status::timeout;
        return r;
      }
    }
  }

  void close() override {
    {
      std::lock_guard lk(out_->mu);
      out_->closed = true;
    }
    out_->cv.notify_all();
  }

 private:
  std::shared_ptr<detail::Pipe> in_;
  std::shared_ptr<detail::Pipe> out_;
};

inline std::pair<std::unique_ptr<InProcChannel>, std::unique_ptr<InProcChannel>> make_inproc_pair() {
  auto ab = std::make_shared<detail::Pipe>();
  auto ba = std::make_shared<detail::Pipe>();
  return {std::make_unique<InProcChannel>(ba, ab), std::make_unique<InProcChannel>(ab, ba)};
}

/// Sleeps a random interval before every send. Used to check that wall-clock
/// jitter never leaks into results.
class DelayChannel final : public LineChannel {
 public:
  DelayChannel(LineChannel& inner, std::chrono::microseconds max_delay, std::uint64_t seed)
      : inner_(inner), max_(max_delay), rng_(seed) {}

  void send(std::string_view bytes) override {
    std::uniform_int_distribution<std::int64_t> dist(0, max_.count());
    std::chrono::microseconds d;
    {
      std::lock_guard lk(mu_);
      d = std::chrono::microseconds(dist(rng_));
    }
    if (d.count() > 0) std::this_thread::sleep_for(d);
    inner_.send(bytes);
  }
  Received receive(Clock::duration timeout) override { return inner_.receive(timeout); }
  void close() override { inner_.close(); }

 private:
  LineChannel& inner_;
  std::chrono::microseconds max_;
  std::mutex mu_;
  std::mt19937_64 rng_;
};

}  // namespace chil::protocol
