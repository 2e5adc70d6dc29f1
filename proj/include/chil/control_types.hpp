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

// Plain configuration and state types shared by the controller and the wire
// protocol.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chil/error.hpp"

namespace chil {

enum class ChargeMode { precharge, cc, cv, done };

inline std::string_view to_string(ChargeMode m) {
  switch (m) {
    case ChargeMode::precharge: return "PRECHARGE";
    case ChargeMode::cc: return "CC";
    case ChargeMode::cv: return "CV";
    case ChargeMode::done: return "DONE";
  }
  return "?";
}

inline std::optional<ChargeMode> parse_charge_mode(std::string_view s) {
  if (s == "PRECHARGE") return ChargeMode::precharge;
  if (s == "CC") return ChargeMode::cc;
  if (s == "CV") return ChargeMode::cv;
  if (s == "DONE") return ChargeMode::done;
  return std::nullopt;
}

enum class LoopKind { voltage, current };

struct Breakpoint {
  double abs_error = 0.0;
  double gain = 0.0;
  friend bool operator==(const Breakpoint&, const Breakpoint&) = default;
};

/// Error-magnitude to gain map. Gains live in [0, 1].
struct GainSchedule {
  std::vector<Breakpoint> breakpoints;
  double gain_floor = 0.0;
  double gain_ceiling = 1.0;

  static GainSchedule constant(double gain) { return {{{0.0, gain}}, 0.0, 1.0}; }

  void validate() const {
    if (breakpoints.empty()) throw ConfigError("gain schedule: no breakpoints");
    if (!(gain_floor >= 0.0 && gain_floor <= gain_ceiling && gain_ceiling <= 1.0))
      throw ConfigError("gain schedule: require 0 <= floor <= ceiling <= 1");
    for (std::size_t k = 0; k < breakpoints.size(); ++k) {
      const auto& b = breakpoints[k];
      if (!(b.abs_error >= 0.0)) throw ConfigError("gain schedule: negative breakpoint error");
      if (!(b.gain >= gain_floor && b.gain <= gain_ceiling))
        throw ConfigError("gain schedule: breakpoint gain outside [floor, ceiling]");
      if (k > 0) {
        if (!(b.abs_error > breakpoints[k - 1].abs_error))
          throw ConfigError("gain schedule: breakpoint errors must be strictly increasing");
        if (b.gain < breakpoints[k - 1].gain)
          throw ConfigError("gain schedule: breakpoint gains must be nondecreasing");
      }
    }
  }

  friend bool operator==(const GainSchedule&, const GainSchedule&) = default;
};

struct PidConfig {
  GainSchedule kp_schedule;
  GainSchedule ki_schedule;
  GainSchedule kd_schedule;
  double ki_gain = 0.0;  // scales the scheduled integral gain
  double kd_gain = 0.0;  // scales the scheduled derivative gain
  double reference_scale = 1.0;
  double duty_min = 0.0;
  double duty_max = 0.8;

  void validate() const {
    kp_schedule.validate();
    ki_schedule.validate();
    kd_schedule.validate();
    if (!(ki_gain >= 0.0) || !(kd_gain >= 0.0)) throw ConfigError("pid: ki_gain and kd_gain must be >= 0");
    if (!(reference_scale > 0.0)) throw ConfigError("pid: reference_scale must be > 0");
    if (!(duty_min >= 0.0 && duty_min < duty_max && duty_max < 1.0))
      throw ConfigError("pid: require 0 <= duty_min < duty_max < 1");
  }

  friend bool operator==(const PidConfig&, const PidConfig&) = default;
};

struct PidState {
  double integral = 0.0;
  double prev_error = 0.0;
  double last_output = 0.0;
  friend bool operator==(const PidState&, const PidState&) = default;
};

struct SupervisorConfig {
  double i_cc_ref = 23.0;           // A
  double v_cv_ref = 400.0;          // V
  double cv_entry_fraction = 1.0;
  double i_terminate = 2.7 / 20.0;  // A, C/20

  void validate() const {
    if (!(i_cc_ref > 0.0) || !(v_cv_ref > 0.0)) throw ConfigError("supervisor: references must be > 0");
    if (!(cv_entry_fraction > 0.0 && cv_entry_fraction <= 1.0))
      throw ConfigError("supervisor: require 0 < cv_entry_fraction <= 1");
    if (!(i_terminate > 0.0 && i_terminate < i_cc_ref))
      throw ConfigError("supervisor: require 0 < i_terminate < i_cc_ref");
  }

  friend bool operator==(const SupervisorConfig&, const SupervisorConfig&) = default;
};

/// Everything a controller needs; travels in the plant's HELLO.
struct ControllerConfig {
  PidConfig voltage_loop;
  PidConfig current_loop;
  SupervisorConfig supervisor;

  void validate() const {
    voltage_loop.validate();
    current_loop.validate();
    supervisor.validate();
  }

  const PidConfig& loop(LoopKind k) const { return k == LoopKind::voltage ? voltage_loop : current_loop; }

  friend bool operator==(const ControllerConfig&, const ControllerConfig&) = default;
};

inline PidConfig default_voltage_loop() {
  PidConfig c;
  c.kp_schedule = {{{10.0, 0.5}, {20.0, 1.0}}, 0.05, 1.0};
  c.ki_schedule = GainSchedule::constant(1.0);
  c.kd_schedule = GainSchedule::constant(1.0);
  c.ki_gain = 160.0;
  c.kd_gain = 0.0;
  c.reference_scale = 400.0;
  return c;
}

/// Breakpoints at 2.5 % and 5 % of the 23 A reference.
inline PidConfig default_current_loop() {
  PidConfig c;
  c.kp_schedule = {{{0.575, 0.5}, {1.15, 1.0}}, 0.05, 1.0};
  c.ki_schedule = GainSchedule::constant(1.0);
  c.kd_schedule = GainSchedule::constant(1.0);
  c.ki_gain = 1800.0;
  c.kd_gain = 0.0;
  c.reference_scale = 2300.0;
  return c;
}

inline ControllerConfig default_controller_config() {
  return {default_voltage_loop(), default_current_loop(), SupervisorConfig{}};
}

}  // namespace chil
