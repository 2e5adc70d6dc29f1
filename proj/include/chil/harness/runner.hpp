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

// The co-simulation loop: plant and battery stepped at dt_plant, a
// controller endpoint consulted every dt_ctrl or on an event.

#include <algorithm>
#include <cmath>
#include <exception>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>

#include "chil/battery.hpp"
#include "chil/controller.hpp"
#include "chil/error.hpp"
#include "chil/harness/metrics.hpp"
#include "chil/harness/scenario.hpp"
#include "chil/harness/trace.hpp"
#include "chil/plant.hpp"
#include "chil/protocol/channel.hpp"
#include "chil/protocol/link.hpp"
#include "chil/protocol/tcp.hpp"

namespace chil::harness {

inline constexpr const char* kEventRelayClosed = "relay_closed";
inline constexpr const char* kEventCvThreshold = "cv_threshold";

/// Where commands come from. nullopt from exchange() means the controller
/// ended the session.
class ControllerEndpoint {
 public:
  virtual ~ControllerEndpoint() = default;
  virtual void open(const ScenarioConfig& cfg) = 0;
  virtual std::optional<protocol::CommandFrame> exchange(const protocol::MeasurementFrame& m) = 0;
  virtual void close() = 0;
};

/// Calls the reference controller directly, no framing.
class DirectEndpoint final : public ControllerEndpoint {
 public:
  void open(const ScenarioConfig& cfg) override { ctl_.emplace(cfg.controller, cfg.dt_ctrl); }
  std::optional<protocol::CommandFrame> exchange(const protocol::MeasurementFrame& m) override { return ctl_->tick(m); }
  void close() override {}

 private:
  std::optional<control::Controller> ctl_;
};

/// Plant side of a framed link over any channel.
class LinkEndpoint : public ControllerEndpoint {
 public:
  explicit LinkEndpoint(protocol::LineChannel& ch, protocol::LinkOptions opt = {}) { attach(ch, opt); }

  void open(const ScenarioConfig& cfg) override {
    protocol::plant_handshake(*link_, cfg.dt_ctrl, cfg.controller);
    hb_ = std::make_unique<protocol::Heartbeat>(*link_);
  }

  std::optional<protocol::CommandFrame> exchange(const protocol::MeasurementFrame& m) override {
    hb_->end();
    auto cmd = protocol::lockstep_exchange(*link_, m);
    hb_->begin();
    return cmd;
  }

  void close() override {
    if (hb_) hb_->end();
    hb_.reset();
    link_->end();
  }

  protocol::Link& link() { return *link_; }

  ~LinkEndpoint() override { shutdown(); }

 protected:
  LinkEndpoint() = default;
  void attach(protocol::LineChannel& ch, protocol::LinkOptions opt) { link_ = std::make_unique<protocol::Link>(ch, opt); }

  // Must run before the channel goes away.
  void shutdown() noexcept {
    hb_.reset();
    if (link_) link_->fail("plant aborted");
    link_.reset();
  }

 private:
  std::unique_ptr<protocol::Link> link_;
  std::unique_ptr<protocol::Heartbeat> hb_;
};

/// Controller side: handshake, then the reference controller until END.
inline std::uint64_t run_reference_controller(protocol::LineChannel& ch, protocol::ServeOptions opt = {},
                                              protocol::LinkOptions lopt = {}) {
  protocol::Link link(ch, lopt);
  const protocol::HelloFrame hello = protocol::controller_handshake(link);
  control::Controller ctl(*hello.config, hello.dt_ctrl);
  const auto served =
      protocol::serve_controller(link, [&](const protocol::MeasurementFrame& m) { return ctl.tick(m); }, opt);
  ch.close();
  return served;
}

struct ReferenceOptions {
  protocol::ServeOptions serve;
  std::chrono::microseconds max_delay{0};  // per-send jitter on both directions
  std::uint64_t seed = 1;
};

namespace detail {

// Owns the far-end thread and surfaces its failure after the run.
class FarEnd {
 public:
  template <class F>
  void start(F&& body) {
    thread_ = std::thread([this, body = std::forward<F>(body)]() mutable {
      try {
        body();
      } catch (...) {
        error_ = std::current_exception();
      }
    });
  }
  void join() {
    if (thread_.joinable()) thread_.join();
  }
  std::exception_ptr error() const { return error_; }
  ~FarEnd() { join(); }

 private:
  std::thread thread_;
  std::exception_ptr error_;
};

}  // namespace detail

/// Reference controller on a thread, in-memory pipe between them.
class InProcEndpoint final : public LinkEndpoint {
 public:
  explicit InProcEndpoint(ReferenceOptions opt = {}) : opt_(opt) {
    auto [a, b] = protocol::make_inproc_pair();
    plant_raw_ = std::move(a);
    ctl_raw_ = std::move(b);
    protocol::LineChannel* plant_ch = plant_raw_.get();
    ctl_ch_ = ctl_raw_.get();
    if (opt_.max_delay.count() > 0) {
      plant_delay_ = std::make_unique<protocol::DelayChannel>(*plant_raw_, opt_.max_delay, opt_.seed);
      ctl_delay_ = std::make_unique<protocol::DelayChannel>(*ctl_raw_, opt_.max_delay, opt_.seed + 1);
      plant_ch = plant_delay_.get();
      ctl_ch_ = ctl_delay_.get();
    }
    attach(*plant_ch, {});
  }

  void open(const ScenarioConfig& cfg) override {
    far_.start([this] { run_reference_controller(*ctl_ch_, opt_.serve); });
    LinkEndpoint::open(cfg);
  }

  void close() override {
    LinkEndpoint::close();
    far_.join();
    if (far_.error()) std::rethrow_exception(far_.error());
  }

  ~InProcEndpoint() override {
    shutdown();
    if (plant_raw_) plant_raw_->close();
    far_.join();
  }

 private:
  ReferenceOptions opt_;
  std::unique_ptr<protocol::InProcChannel> plant_raw_, ctl_raw_;
  std::unique_ptr<protocol::DelayChannel> plant_delay_, ctl_delay_;
  protocol::LineChannel* ctl_ch_ = nullptr;
  detail::FarEnd far_;
};

/// Plant listens on a TCP address and waits for a controller to dial in.
/// With a reference controller attached, that controller runs on a thread
/// in this process and connects over loopback.
class TcpEndpoint final : public ControllerEndpoint {
 public:
  TcpEndpoint(const std::string& address, bool spawn_reference, ReferenceOptions ref = {},
              protocol::Clock::duration accept_timeout = std::chrono::seconds(10))
      : listener_(protocol::parse_endpoint(address)),
        spawn_(spawn_reference),
        ref_(ref),
        accept_timeout_(accept_timeout) {}

  unsigned short port() const { return listener_.port(); }

  void open(const ScenarioConfig& cfg) override {
    if (spawn_) {
      const unsigned short port = listener_.port();
      far_.start([this, port] {
        auto ch = protocol::tcp_connect({"127.0.0.1", port}, std::chrono::seconds(5));
        run_reference_controller(*ch, ref_.serve);
      });
    }
    channel_ = listener_.accept(accept_timeout_);
    inner_ = std::make_unique<LinkEndpoint>(*channel_);
    inner_->open(cfg);
  }

  std::optional<protocol::CommandFrame> exchange(const protocol::MeasurementFrame& m) override {
    return inner_->exchange(m);
  }

  void close() override {
    inner_->close();
    far_.join();
    if (far_.error()) std::rethrow_exception(far_.error());
  }

  ~TcpEndpoint() override {
    inner_.reset();
    channel_.reset();
    far_.join();
  }

 private:
  protocol::TcpListener listener_;
  bool spawn_;
  ReferenceOptions ref_;
  protocol::Clock::duration accept_timeout_;
  std::unique_ptr<protocol::TcpChannel> channel_;
  std::unique_ptr<LinkEndpoint> inner_;
  detail::FarEnd far_;
};

inline std::unique_ptr<ControllerEndpoint> make_endpoint(const ScenarioConfig& cfg) {
  if (cfg.transport.kind == TransportKind::tcp) return std::make_unique<TcpEndpoint>(cfg.transport.address, true);
  return std::make_unique<InProcEndpoint>();
}

enum class Termination { duration, done, end };

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::duration: return "duration";
    case Termination::done: return "done";
    case Termination::end: return "end";
  }
  return "?";
}

struct ScenarioResult {
  Trace trace;
  std::optional<MetricsReport> metrics;
  std::string metrics_error;
  Termination termination = Termination::duration;
  double initial_soc = 0.0;
  double final_soc = 0.0;
  double charge_in = 0.0;  // A s delivered into the pack, summed per plant step
  std::uint64_t plant_steps = 0;
};

/// A run that stopped on an exception. Carries what was recorded so far.
class RunAborted : public Error {
 public:
  RunAborted(std::string what, Trace partial, std::exception_ptr cause)
      : Error(std::move(what)), trace_(std::move(partial)), cause_(std::move(cause)) {}
  const Trace& trace() const { return trace_; }
  std::exception_ptr cause() const { return cause_; }

 private:
  Trace trace_;
  std::exception_ptr cause_;
};

/// Proportional gain in effect for the command, recomputed from what the
/// plant knows so that every transport yields the same trace.
inline double active_kp(const protocol::CommandFrame& cmd, const protocol::MeasurementFrame& m,
                        const ControllerConfig& cfg) {
  const LoopKind loop = control::active_loop(cmd.mode);
  const double error = control::loop_reference(cmd.mode, cfg.supervisor) - control::loop_measurement(loop, m);
  return control::schedule_gain(error, cfg.loop(loop).kp_schedule);
}

inline ScenarioResult run_scenario(const ScenarioConfig& cfg, ControllerEndpoint& endpoint,
                                   const MetricsOptions& mopt = {}) {
  cfg.validate();
  const std::uint64_t ratio = protocol::tick_ratio(cfg.dt_ctrl, cfg.dt_plant);
  const auto n_steps = static_cast<std::uint64_t>(std::llround(cfg.duration / cfg.dt_plant));
  const double cv_threshold = cfg.controller.supervisor.cv_entry_fraction * cfg.controller.supervisor.v_cv_ref;

  ScenarioResult res;
  res.initial_soc = cfg.initial_soc;
  plant::ConverterState st{0.0, cfg.initial_v_out, false, 0.0};
  battery::PackState pack{cfg.initial_soc};
  const double v_rest = battery::pack_open_circuit_voltage(pack, cfg.cell, cfg.pack);

  double duty = 0.0;
  std::uint64_t seq = 0;
  std::optional<std::string> event;
  bool cv_event_sent = false;

  try {
    if (n_steps > 0) {
      endpoint.open(cfg);
      bool stop = false;
      for (std::uint64_t k = 0; k < n_steps && !stop; ++k) {
        st.t = static_cast<double>(k) * cfg.dt_plant;
        const double i_load =
            st.relay_closed ? battery::charge_current(st.v_out, pack, cfg.cell, cfg.pack) : 0.0;

        if (protocol::should_exchange(k, ratio, event)) {
          protocol::MeasurementFrame m{seq,
                                       st.t,
                                       plant::primary_voltage(st, cfg.source),
                                       plant::secondary_voltage(st),
                                       plant::primary_current(st),
                                       i_load,
                                       st.relay_closed,
                                       std::exchange(event, std::nullopt)};
          auto cmd = endpoint.exchange(m);
          if (!cmd) {
            res.termination = Termination::end;
            break;
          }
          ++seq;
          duty = std::clamp(cmd->duty, cfg.converter.duty_min, cfg.converter.duty_max);
          res.trace.push_back({m.t_sim, m.v_primary, m.v_secondary, m.i_primary, m.i_secondary, pack.soc, duty,
                               cmd->mode, active_kp(*cmd, m, cfg.controller)});
          if (cmd->mode == ChargeMode::done) {
            res.termination = Termination::done;
            stop = true;
            continue;
          }
        }

        if (k % ratio == 0 && !st.relay_closed &&
            plant::precharge_supervisor(st, v_rest, cfg.precharge) == plant::RelayCommand::close) {
          st.relay_closed = true;
          event = kEventRelayClosed;
        }

        const double v_before = st.v_out;
        st = plant::integrate_step(st, duty, i_load, cfg.dt_plant, cfg.converter, cfg.source, k);
        st.t = static_cast<double>(k + 1) * cfg.dt_plant;
        pack = battery::coulomb_step(pack, i_load, cfg.dt_plant, cfg.cell, cfg.pack);
        res.charge_in += i_load * cfg.dt_plant;
        ++res.plant_steps;

        if (st.relay_closed && !cv_event_sent && v_before < cv_threshold && st.v_out >= cv_threshold) {
          cv_event_sent = true;
          event = kEventCvThreshold;
        }
      }
      if (res.termination != Termination::end) endpoint.close();
    }
  } catch (const std::exception& e) {
    throw RunAborted(e.what(), std::move(res.trace), std::current_exception());
  }

  res.final_soc = pack.soc;
  try {
    res.metrics = compute_metrics(res.trace, mopt);
  } catch (const MetricsError& e) {
    res.metrics_error = e.what();
  }
  return res;
}

/// Convenience overload: endpoint chosen from cfg.transport.
inline ScenarioResult run_scenario(const ScenarioConfig& cfg, const MetricsOptions& mopt = {}) {
  auto ep = make_endpoint(cfg);
  return run_scenario(cfg, *ep, mopt);
}

}  // namespace chil::harness
