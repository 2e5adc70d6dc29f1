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

// NCR18650 cell (affine OCV, series resistance, coulomb counting) scaled to
// an n_series x n_parallel pack.

#include <algorithm>
#include <functional>

#include "chil/error.hpp"

namespace chil::battery {

struct CellParams {
  double capacity = 2.7;    // Ah
  double v_max = 4.2;       // V
  double v_cutoff = 3.0;    // V
  double v_nominal = 3.6;   // V
  double r_cell = 0.010;    // ohm

  void validate() const {
    if (!(v_cutoff < v_nominal && v_nominal < v_max))
      throw ConfigError("cell: require v_cutoff < v_nominal < v_max");
    if (!(capacity > 0.0)) throw ConfigError("cell: capacity must be > 0");
    if (!(r_cell >= 0.0)) throw ConfigError("cell: r_cell must be >= 0");
  }
};

struct PackConfig {
  int n_series = 96;
  int n_parallel = 1;

  void validate() const {
    if (n_series < 1 || n_parallel < 1) throw ConfigError("pack: n_series and n_parallel must be >= 1");
  }
};

struct PackState {
  double soc = 0.5;
};

/// Replaces the affine curve when set. Must be strictly increasing on [0, 1].
using OcvCurve = std::function<double(double soc, const CellParams&)>;

inline double affine_ocv(double soc, const CellParams& cell) {
  return cell.v_cutoff + (cell.v_max - cell.v_cutoff) * soc;
}

inline double open_circuit_voltage(double soc, const CellParams& cell, const OcvCurve& curve = {}) {
  if (!(soc >= 0.0 && soc <= 1.0)) throw DomainError("open_circuit_voltage: soc outside [0, 1]");
  return curve ? curve(soc, cell) : affine_ocv(soc, cell);
}

inline double pack_resistance(const CellParams& cell, const PackConfig& cfg) {
  return cfg.n_series * cell.r_cell / cfg.n_parallel;
}

inline double pack_open_circuit_voltage(const PackState& st, const CellParams& cell,
                                        const PackConfig& cfg, const OcvCurve& curve = {}) {
  return cfg.n_series * open_circuit_voltage(st.soc, cell, curve);
}

inline double pack_terminal_voltage(const PackState& st, double i_charge, const CellParams& cell,
                                    const PackConfig& cfg, const OcvCurve& curve = {}) {
  return cfg.n_series * (open_circuit_voltage(st.soc, cell, curve) + cell.r_cell * i_charge / cfg.n_parallel);
}

/// Current the pack accepts from a terminal held at v_terminal. Charging
/// only: a terminal below OCV draws nothing.
inline double charge_current(double v_terminal, const PackState& st, const CellParams& cell,
                             const PackConfig& cfg, const OcvCurve& curve = {}) {
  const double r = pack_resistance(cell, cfg);
  const double ocv = pack_open_circuit_voltage(st, cell, cfg, curve);
  if (r <= 0.0) throw ConfigError("charge_current: pack resistance must be > 0 for algebraic coupling");
  return std::max(0.0, (v_terminal - ocv) / r);
}

inline PackState coulomb_step(const PackState& st, double i_charge, double dt, const CellParams& cell,
                              const PackConfig& cfg) {
  if (!(dt > 0.0)) throw DomainError("coulomb_step: dt must be > 0");
  const double soc = st.soc + i_charge * dt / (3600.0 * cell.capacity * cfg.n_parallel);
  return {std::clamp(soc, 0.0, 1.0)};
}

}  // namespace chil::battery
