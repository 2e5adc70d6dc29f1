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

// Averaged boost-converter charger: resistive source, inductor, output
// capacitor and a relay to the battery. States are plain values; every
// operation is a pure function of its inputs.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "chil/error.hpp"

namespace chil::plant {

struct SourceParams {
  double v_source = 300.0;   // V
  double r_internal = 0.25;  // ohm

  void validate() const {
    if (!(v_source > 0.0)) throw ConfigError("source: v_source must be > 0");
    if (!(r_internal >= 0.0)) throw ConfigError("source: r_internal must be >= 0");
  }
};

struct ConverterParams {
  double inductance = 500e-6;   // H
  double capacitance = 470e-6;  // F
  double duty_min = 0.0;
  double duty_max = 0.8;

  void validate() const {
    if (!(inductance > 0.0)) throw ConfigError("converter: inductance must be > 0");
    if (!(capacitance > 0.0)) throw ConfigError("converter: capacitance must be > 0");
    if (!(duty_min >= 0.0 && duty_min < duty_max && duty_max < 1.0))
      throw ConfigError("converter: require 0 <= duty_min < duty_max < 1");
  }
};

struct ConverterState {
  double i_inductor = 0.0;  // A
  double v_out = 0.0;       // V
  bool relay_closed = false;
  double t = 0.0;  // s

  friend bool operator==(const ConverterState&, const ConverterState&) = default;
};

struct Derivative {
  double di_dt = 0.0;  // A/s
  double dv_dt = 0.0;  // V/s
};

/// Continuous averaged model. The input diode blocks reverse inductor
/// current: at i <= 0 a negative di/dt is clamped to zero and the switch
/// node carries no current. In conduction this is exactly
///   di/dt = (v_s - r i - (1 - d) v) / L,  dv/dt = ((1 - d) i - i_load) / C.
inline Derivative converter_derivatives(const ConverterState& s, double duty, double i_load,
                                        const ConverterParams& cp, const SourceParams& sp) {
  if (!std::isfinite(s.i_inductor) || !std::isfinite(s.v_out) || !std::isfinite(duty) ||
      !std::isfinite(i_load))
    throw ModelError("converter_derivatives: non-finite input");

  const double i_conduct = std::max(s.i_inductor, 0.0);
  const double off = 1.0 - duty;
  double di = (sp.v_source - sp.r_internal * i_conduct - off * s.v_out) / cp.inductance;
  if (s.i_inductor <= 0.0 && di < 0.0) di = 0.0;
  const double dv = (off * i_conduct - i_load) / cp.capacitance;
  return {di, dv};
}

/// One classical RK4 step under zero-order hold of duty and load current.
/// `step_index` only labels a divergence report.
inline ConverterState integrate_step(const ConverterState& s, double duty, double i_load, double dt,
                                     const ConverterParams& cp, const SourceParams& sp,
                                     std::uint64_t step_index = 0) {
  auto at = [&](double i, double v) {
    if (!std::isfinite(i) || !std::isfinite(v))
      throw DivergenceError(step_index, "non-finite RK4 stage (dt too large for L and C?)");
    ConverterState x = s;
    x.i_inductor = i;
    x.v_out = v;
    return converter_derivatives(x, duty, i_load, cp, sp);
  };
  const double h = dt;
  const Derivative k1 = at(s.i_inductor, s.v_out);
  const Derivative k2 = at(s.i_inductor + 0.5 * h * k1.di_dt, s.v_out + 0.5 * h * k1.dv_dt);
  const Derivative k3 = at(s.i_inductor + 0.5 * h * k2.di_dt, s.v_out + 0.5 * h * k2.dv_dt);
  const Derivative k4 = at(s.i_inductor + h * k3.di_dt, s.v_out + h * k3.dv_dt);

  ConverterState next = s;
  next.i_inductor =
      s.i_inductor + h / 6.0 * (k1.di_dt + 2.0 * k2.di_dt + 2.0 * k3.di_dt + k4.di_dt);
  next.v_out = s.v_out + h / 6.0 * (k1.dv_dt + 2.0 * k2.dv_dt + 2.0 * k3.dv_dt + k4.dv_dt);
  next.t = s.t + dt;
  if (!std::isfinite(next.i_inductor) || !std::isfinite(next.v_out))
    throw DivergenceError(step_index, "non-finite converter state (dt too large for L and C?)");
  if (next.i_inductor < 0.0) next.i_inductor = 0.0;
  return next;
}

struct PrechargeConfig {
  double t_precharge_min = 0.2;    // s
  double v_match_tolerance = 60.0;  // V

  void validate() const {
    if (!(t_precharge_min >= 0.0)) throw ConfigError("precharge: t_precharge_min must be >= 0");
    if (!(v_match_tolerance >= 0.0)) throw ConfigError("precharge: v_match_tolerance must be >= 0");
  }
};

enum class RelayCommand { open, close };

/// Close once the output has had time to settle and sits close enough to the
/// pack's rest voltage that the closing surge stays below
/// v_match_tolerance / pack resistance. The caller latches the result.
inline RelayCommand precharge_supervisor(const ConverterState& s, double v_pack_rest,
                                         const PrechargeConfig& cfg) {
  if (s.relay_closed) return RelayCommand::close;
  const bool settled = s.t >= cfg.t_precharge_min;
  const bool matched = std::abs(s.v_out - v_pack_rest) <= cfg.v_match_tolerance;
  return settled && matched ? RelayCommand::close : RelayCommand::open;
}

// Measurands. Primary is the source node, secondary the battery
// terminal (the converter output).

inline double primary_voltage(const ConverterState& s, const SourceParams& sp) {
  return sp.v_source - sp.r_internal * s.i_inductor;
}
inline double primary_current(const ConverterState& s) { return s.i_inductor; }
inline double secondary_voltage(const ConverterState& s) { return s.v_out; }

}  // namespace chil::plant
