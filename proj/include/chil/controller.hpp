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

// Gain-scheduled PID plus the CC-CV charging supervisor.
//
// The arithmetic below is the reference for any foreign controller that
// wants bit-identical commands; keep the operation order stable.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "chil/control_types.hpp"
#include "chil/protocol/frames.hpp"

namespace chil::control {

/// Piecewise-linear in |error| through the breakpoints, the end segments
/// extended linearly, then clamped to [floor, ceiling].
inline double schedule_gain(double error, const GainSchedule& sched) {
  const double a = std::abs(error);
  const auto& bp = sched.breakpoints;
  double g = bp.empty() ? sched.gain_floor : bp.front().gain;
  if (bp.size() >= 2) {
    std::size_t k = 0;
    while (k + 2 < bp.size() && a > bp[k + 1].abs_error) ++k;
    const Breakpoint& lo = bp[k];
    const Breakpoint& hi = bp[k + 1];
    g = lo.gain + (hi.gain - lo.gain) * (a - lo.abs_error) / (hi.abs_error - lo.abs_error);
  }
  return std::clamp(g, sched.gain_floor, sched.gain_ceiling);
}

struct PidOutput {
  double duty = 0.0;
  PidState state;
  double kp = 0.0;  // proportional gain used this step
};

/// One controller tick. The integral is frozen while the previous output sat
/// on a duty limit and the error pushes further into it.
inline PidOutput pid_step(double error, const PidState& st, const PidConfig& cfg, double dt) {
  if (!(dt > 0.0)) throw ConfigError("pid_step: dt must be > 0");
  if (!std::isfinite(error)) throw DomainError("pid_step: non-finite error");

  const double e_n = error / cfg.reference_scale;
  const double prev_n = st.prev_error / cfg.reference_scale;

  const bool pushing_high = st.last_output >= cfg.duty_max && error > 0.0;
  const bool pushing_low = st.last_output <= cfg.duty_min && error < 0.0;
  const double integral = (pushing_high || pushing_low) ? st.integral : st.integral + e_n * dt;

  const double gp = schedule_gain(error, cfg.kp_schedule);
  const double gi = cfg.ki_gain * schedule_gain(error, cfg.ki_schedule);
  const double gd = cfg.kd_gain * schedule_gain(error, cfg.kd_schedule);

  const double u = gp * e_n + gi * integral + gd * ((e_n - prev_n) / dt);
  const double duty = std::clamp(u, cfg.duty_min, cfg.duty_max);
  return {duty, {integral, error, duty}, gp};
}

/// Integrator re-initialisation for a loop that takes over at `error` while
/// the actuator sits at `last_output` (bumpless transfer).
inline PidState bumpless_state(double error, double last_output, const PidConfig& cfg) {
  const double e_n = error / cfg.reference_scale;
  const double gp = schedule_gain(error, cfg.kp_schedule);
  const double gi = cfg.ki_gain * schedule_gain(error, cfg.ki_schedule);
  const double integral = gi > 0.0 ? (last_output - gp * e_n) / gi : 0.0;
  return {integral, error, last_output};
}

inline LoopKind active_loop(ChargeMode m) { return m == ChargeMode::cc ? LoopKind::current : LoopKind::voltage; }

inline double loop_reference(ChargeMode m, const SupervisorConfig& sup) {
  return m == ChargeMode::cc ? sup.i_cc_ref : sup.v_cv_ref;
}

struct SupervisorDecision {
  ChargeMode mode = ChargeMode::precharge;
  LoopKind loop = LoopKind::voltage;
  double reference = 0.0;
  friend bool operator==(const SupervisorDecision&, const SupervisorDecision&) = default;
};

/// At most one latched transition per call: PRECHARGE -> CC -> CV -> DONE.
inline SupervisorDecision supervisor_step(double v_batt, double i_batt, ChargeMode mode, bool relay_closed,
                                          const SupervisorConfig& sup) {
  ChargeMode next = mode;
  switch (mode) {
    case ChargeMode::precharge:
      if (relay_closed) next = ChargeMode::cc;
      break;
    case ChargeMode::cc:
      if (v_batt >= sup.cv_entry_fraction * sup.v_cv_ref) next = ChargeMode::cv;
      break;
    case ChargeMode::cv:
      if (i_batt <= sup.i_terminate) next = ChargeMode::done;
      break;
    case ChargeMode::done:
      break;
  }
  return {next, active_loop(next), loop_reference(next, sup)};
}

inline double loop_measurement(LoopKind loop, const protocol::MeasurementFrame& m) {
  return loop == LoopKind::current ? m.i_secondary : m.v_secondary;
}

struct ControllerState {
  ChargeMode mode = ChargeMode::precharge;
  PidState pid;
  double time_of_operation = 0.0;
  std::uint64_t next_seq = 0;
  friend bool operator==(const ControllerState&, const ControllerState&) = default;
};

struct TickResult {
  protocol::CommandFrame command;
  ControllerState state;
  double kp = 0.0;
};

inline TickResult controller_tick(const protocol::MeasurementFrame& meas, const ControllerState& st,
                                  const ControllerConfig& cfg, double dt) {
  if (meas.seq != st.next_seq)
    throw ProtocolOrderError("controller expected seq " + std::to_string(st.next_seq) + ", got " +
                             std::to_string(meas.seq));

  const SupervisorDecision d = supervisor_step(meas.v_secondary, meas.i_secondary, st.mode, meas.relay_closed,
                                               cfg.supervisor);
  const PidConfig& loop = cfg.loop(d.loop);
  const double error = d.reference - loop_measurement(d.loop, meas);

  const PidState pid = d.mode != st.mode ? bumpless_state(error, st.pid.last_output, loop) : st.pid;
  const PidOutput out = pid_step(error, pid, loop, dt);

  TickResult r;
  r.state.mode = d.mode;
  r.state.pid = out.state;
  r.state.time_of_operation = st.time_of_operation + dt;
  r.state.next_seq = st.next_seq + 1;
  r.command = {meas.seq, true, d.mode, r.state.time_of_operation, out.duty};
  r.kp = out.kp;
  return r;
}

/// Stateful wrapper for callers that want an object.
class Controller {
 public:
  Controller(ControllerConfig cfg, double dt_ctrl) : cfg_(std::move(cfg)), dt_(dt_ctrl) {
    cfg_.validate();
    if (!(dt_ > 0.0)) throw ConfigError("controller: dt_ctrl must be > 0");
  }

  protocol::CommandFrame tick(const protocol::MeasurementFrame& meas) {
    TickResult r = controller_tick(meas, state_, cfg_, dt_);
    state_ = r.state;
    last_kp_ = r.kp;
    return r.command;
  }

  const ControllerState& state() const { return state_; }
  const ControllerConfig& config() const { return cfg_; }
  double last_kp() const { return last_kp_; }

 private:
  ControllerConfig cfg_;
  double dt_;
  ControllerState state_;
  double last_kp_ = 0.0;
};

}  // namespace chil::control
