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

// Session layer: handshake, lockstep request/response with seq echo, and
// PAUSE/RESUME heartbeats while one side is busy.

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <variant>

#include "chil/error.hpp"
#include "chil/protocol/channel.hpp"
#include "chil/protocol/codec.hpp"
#include "chil/protocol/frames.hpp"

namespace chil::protocol {

enum class Phase { handshake, running, paused_local, paused_remote, ended };

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::handshake: return "HANDSHAKE";
    case Phase::running: return "RUNNING";
    case Phase::paused_local: return "PAUSED_LOCAL";
    case Phase::paused_remote: return "PAUSED_REMOTE";
    case Phase::ended: return "ENDED";
  }
  return "?";
}

struct LinkOptions {
  Clock::duration response_timeout = std::chrono::seconds(2);
  Clock::duration pause_threshold = std::chrono::milliseconds(500);
};

class Link {
 public:
  explicit Link(LineChannel& ch, LinkOptions opt = {}) : ch_(ch), opt_(opt) {}

  Phase phase() const { return phase_.load(); }
  void set_phase(Phase p) { phase_.store(p); }
  std::uint64_t next_seq() const { return next_seq_; }
  void advance_seq() { ++next_seq_; }
  const LinkOptions& options() const { return opt_; }

  void send(const Frame& f) {
    const std::string line = encode_frame(f);
    std::lock_guard lk(send_mu_);
    ch_.send(line);
  }

  /// Next frame, or throws. Malformed input is answered with ERROR and ends
  /// the link before the exception propagates.
  Frame receive(Clock::duration timeout) {
    Received r = ch_.receive(timeout);
    switch (r.status) {
      case Received::Status::timeout:
        fail("response timeout");
        throw PeerTimeoutError("no frame from peer within the response timeout");
      case Received::Status::closed:
        phase_ = Phase::ended;
        throw RemoteFailureError("peer closed the connection");
      case Received::Status::truncated:
        fail("truncated record");
        throw ParseError(r.line.size(), "truncated record (no newline before end of stream)");
      case Received::Status::line:
        break;
    }
    try {
      return decode_frame(r.line);
    } catch (const ProtocolError& e) {
      fail(e.what());
      throw;
    }
  }

  /// Best-effort ERROR, then ENDED.
  void fail(const std::string& detail) noexcept {
    if (phase_ == Phase::ended) return;
    phase_ = Phase::ended;
    try {
      send(ControlFrame{ControlKind::error, detail});
    } catch (...) {
    }
  }

  /// Orderly shutdown: END frame, then close the write side.
  void end(const std::string& detail = {}) {
    if (phase_ == Phase::ended) return;
    phase_ = Phase::ended;
    try {
      send(ControlFrame{ControlKind::end, detail});
    } catch (const IoError&) {
    }
    ch_.close();
  }

 private:
  LineChannel& ch_;
  LinkOptions opt_;
  std::atomic<Phase> phase_{Phase::handshake};
  std::uint64_t next_seq_ = 0;
  std::mutex send_mu_;
};

/// Background sender of PAUSE heartbeats. Between begin() and end() a PAUSE
/// goes out every pause_threshold; end() sends RESUME if any PAUSE did.
class Heartbeat {
 public:
  explicit Heartbeat(Link& link) : link_(link), thread_([this] { loop(); }) {}
  ~Heartbeat() {
    {
      std::lock_guard lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    thread_.join();
  }
  Heartbeat(const Heartbeat&) = delete;
  Heartbeat& operator=(const Heartbeat&) = delete;

  void begin() {
    {
      std::lock_guard lk(mu_);
      busy_ = true;
      since_ = Clock::now();
    }
    cv_.notify_all();
  }

  void end() {
    bool resumed = false;
    {
      std::lock_guard lk(mu_);
      busy_ = false;
      resumed = std::exchange(paused_, false);
    }
    if (resumed) {
      link_.send(ControlFrame{ControlKind::resume, {}});
      link_.set_phase(Phase::running);
    }
  }

  std::uint64_t pauses_sent() const { return sent_.load(); }

 private:
  void loop() {
    std::unique_lock lk(mu_);
    while (!stop_) {
      if (!busy_) {
        cv_.wait(lk);
        continue;
      }
      const auto due = since_ + link_.options().pause_threshold;
      if (cv_.wait_until(lk, due) == std::cv_status::timeout && busy_ && !stop_ && Clock::now() >= due) {
        try {
          link_.send(ControlFrame{ControlKind::pause, {}});
        } catch (const Error&) {
          return;
        }
        link_.set_phase(Phase::paused_local);
        paused_ = true;
        ++sent_;
        since_ = Clock::now();
      }
    }
  }

  Link& link_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool busy_ = false;
  bool paused_ = false;
  bool stop_ = false;
  Clock::time_point since_;
  std::atomic<std::uint64_t> sent_{0};
  std::thread thread_;
};

/// Plant side. Sends HELLO with the controller configuration and waits for
/// the controller's HELLO echoing the digest.
inline HelloFrame plant_handshake(Link& link, double dt_ctrl, const ControllerConfig& cfg) {
  const std::string digest = config_digest(cfg);
  link.send(HelloFrame{kProtocolVersion, Role::plant, dt_ctrl, digest, cfg});
  Frame f = link.receive(link.options().response_timeout);
  if (auto* c = std::get_if<ControlFrame>(&f); c && c->kind == ControlKind::error) {
    link.set_phase(Phase::ended);
    throw RemoteFailureError("controller refused session: " + c->detail);
  }
  auto* h = std::get_if<HelloFrame>(&f);
  if (!h || h->role != Role::controller) {
    link.fail("expected controller hello");
    throw HandshakeError("expected controller hello");
  }
  if (h->version != kProtocolVersion) {
    link.fail("version mismatch");
    throw HandshakeError("controller speaks protocol version " + std::to_string(h->version));
  }
  if (h->digest != digest) {
    link.fail("config digest mismatch");
    throw HandshakeError("controller config digest " + h->digest + " does not match " + digest);
  }
  if (h->dt_ctrl != dt_ctrl) {
    link.fail("dt_ctrl mismatch");
    throw HandshakeError("controller dt_ctrl differs from plant");
  }
  link.set_phase(Phase::running);
  return *h;
}

/// Controller side. Returns the plant's HELLO, whose config is authoritative.
inline HelloFrame controller_handshake(Link& link, int version = kProtocolVersion) {
  Frame f = link.receive(link.options().response_timeout);
  auto* h = std::get_if<HelloFrame>(&f);
  if (!h || h->role != Role::plant) {
    link.fail("expected plant hello");
    throw HandshakeError("expected plant hello");
  }
  if (h->version != version) {
    link.fail("version mismatch");
    throw HandshakeError("plant speaks protocol version " + std::to_string(h->version));
  }
  if (!h->config) {
    link.fail("plant hello carries no config");
    throw HandshakeError("plant hello carries no config");
  }
  const std::string digest = config_digest(*h->config);
  if (digest != h->digest) {
    link.fail("config digest mismatch");
    throw HandshakeError("plant config digest does not match its config");
  }
  link.send(HelloFrame{version, Role::controller, h->dt_ctrl, digest, std::nullopt});
  link.set_phase(Phase::running);
  return *h;
}

/// Plant side of one exchange. nullopt means the controller sent END.
inline std::optional<CommandFrame> lockstep_exchange(Link& link, const MeasurementFrame& meas) {
  if (link.phase() != Phase::running) throw ProtocolOrderError("exchange attempted outside RUNNING");
  if (meas.seq != link.next_seq())
    throw ProtocolOrderError("measurement seq " + std::to_string(meas.seq) + " != expected " +
                             std::to_string(link.next_seq()));
  link.send(meas);
  while (true) {
    Frame f = link.receive(link.options().response_timeout);
    if (auto* c = std::get_if<CommandFrame>(&f)) {
      if (c->seq != meas.seq) {
        link.fail("seq mismatch");
        throw ProtocolOrderError("command seq " + std::to_string(c->seq) + " does not echo " +
                                 std::to_string(meas.seq));
      }
      link.set_phase(Phase::running);
      link.advance_seq();
      return *c;
    }
    if (auto* c = std::get_if<ControlFrame>(&f)) {
      switch (c->kind) {
        case ControlKind::pause: link.set_phase(Phase::paused_remote); continue;
        case ControlKind::resume:
        case ControlKind::ready: link.set_phase(Phase::running); continue;
        case ControlKind::end: link.set_phase(Phase::ended); return std::nullopt;
        case ControlKind::error:
          link.set_phase(Phase::ended);
          throw RemoteFailureError(c->detail);
      }
    }
    link.fail("unexpected frame");
    throw ProtocolOrderError("unexpected frame while awaiting command");
  }
}

using TickFn = std::function<CommandFrame(const MeasurementFrame&)>;

struct ServeOptions {
  /// Forced PAUSE frames before each reply, followed by one RESUME.
  unsigned pauses_per_reply = 0;
};

/// Controller side loop after the handshake. Returns the number of commands
/// sent when the plant ends the session.
inline std::uint64_t serve_controller(Link& link, const TickFn& tick, ServeOptions opt = {}) {
  Heartbeat hb(link);
  std::uint64_t served = 0;
  while (true) {
    Frame f = link.receive(link.options().response_timeout);
    if (auto* m = std::get_if<MeasurementFrame>(&f)) {
      if (m->seq != link.next_seq()) {
        link.fail("seq gap");
        throw ProtocolOrderError("measurement seq " + std::to_string(m->seq) + " != expected " +
                                 std::to_string(link.next_seq()));
      }
      CommandFrame cmd;
      hb.begin();
      try {
        cmd = tick(*m);
      } catch (const std::exception& e) {
        hb.end();
        link.fail(e.what());
        throw;
      }
      hb.end();
      if (opt.pauses_per_reply > 0) {
        for (unsigned k = 0; k < opt.pauses_per_reply; ++k) link.send(ControlFrame{ControlKind::pause, {}});
        link.send(ControlFrame{ControlKind::resume, {}});
      }
      link.send(cmd);
      link.advance_seq();
      ++served;
      continue;
    }
    if (auto* c = std::get_if<ControlFrame>(&f)) {
      switch (c->kind) {
        case ControlKind::pause: link.set_phase(Phase::paused_remote); continue;
        case ControlKind::resume:
        case ControlKind::ready: link.set_phase(Phase::running); continue;
        case ControlKind::end: link.set_phase(Phase::ended); return served;
        case ControlKind::error:
          link.set_phase(Phase::ended);
          throw RemoteFailureError(c->detail);
      }
    }
    link.fail("unexpected frame");
    throw ProtocolOrderError("unexpected frame while awaiting measurement");
  }
}

/// dt_ctrl / dt_plant as an exact positive integer.
inline std::uint64_t tick_ratio(double dt_ctrl, double dt_plant) {
  if (!(dt_ctrl > 0.0) || !(dt_plant > 0.0)) throw ConfigError("time steps must be > 0");
  const double r = dt_ctrl / dt_plant;
  const double n = std::round(r);
  if (n < 1.0 || std::abs(r - n) > 1e-9 * n) throw ConfigError("dt_ctrl / dt_plant must be a positive integer");
  return static_cast<std::uint64_t>(n);
}

inline bool should_exchange(std::uint64_t index, std::uint64_t ratio, const std::optional<std::string>& event) {
  if (ratio == 0) throw ConfigError("tick ratio must be > 0");
  return event.has_value() || index % ratio == 0;
}

}  // namespace chil::protocol
