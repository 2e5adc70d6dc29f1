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

// Scenario configuration: two builtins plus a JSON overlay format.

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>

#include "chil/battery.hpp"
#include "chil/control_types.hpp"
#include "chil/error.hpp"
#include "chil/plant.hpp"
#include "chil/protocol/codec.hpp"
#include "chil/protocol/link.hpp"
#include "json.hpp"

namespace chil::harness {

enum class TransportKind { inproc, tcp };

struct TransportConfig {
  TransportKind kind = TransportKind::inproc;
  std::string address = "127.0.0.1:0";
};

struct ScenarioConfig {
  std::string name = "cc_50";
  double initial_soc = 0.5;
  double duration = 1.0;     // s
  double dt_plant = 1e-5;    // s
  double dt_ctrl = 1e-4;     // s
  double initial_v_out = 300.0;  // V, capacitor pre-charged to the source
  plant::SourceParams source;
  plant::ConverterParams converter;
  plant::PrechargeConfig precharge;
  battery::CellParams cell;
  battery::PackConfig pack;
  ControllerConfig controller = default_controller_config();
  TransportConfig transport;

  void validate() const {
    if (!(duration >= 0.0)) throw ConfigError("scenario: duration must be >= 0");
    if (!(initial_soc >= 0.0 && initial_soc <= 1.0)) throw ConfigError("scenario: initial_soc must be in [0, 1]");
    if (!(initial_v_out >= 0.0)) throw ConfigError("scenario: initial_v_out must be >= 0");
    protocol::tick_ratio(dt_ctrl, dt_plant);
    source.validate();
    converter.validate();
    precharge.validate();
    cell.validate();
    pack.validate();
    controller.validate();
  }
};

inline ScenarioConfig builtin_cc_50() { return {}; }

inline ScenarioConfig builtin_cv_90() {
  ScenarioConfig s;
  s.name = "cv_90";
  s.initial_soc = 0.9;
  s.duration = 3.0;
  return s;
}

inline std::optional<ScenarioConfig> builtin_scenario(std::string_view name) {
  if (name == "cc_50") return builtin_cc_50();
  if (name == "cv_90") return builtin_cv_90();
  return std::nullopt;
}

namespace detail {

using json = nlohmann::json;

inline void only_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (auto key : keys) known = known || key == k;
    if (!known) throw ConfigError(std::string(where) + ": unknown key \"" + k + "\"");
  }
}

inline void set(const json& j, std::string_view key, double& dst, std::string_view where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_number()) throw ConfigError(std::string(where) + "." + std::string(key) + ": expected a number");
  dst = it->get<double>();
}

inline void set(const json& j, std::string_view key, int& dst, std::string_view where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_number_integer()) throw ConfigError(std::string(where) + "." + std::string(key) + ": expected an integer");
  dst = it->get<int>();
}

inline void set(const json& j, std::string_view key, std::string& dst, std::string_view where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_string()) throw ConfigError(std::string(where) + "." + std::string(key) + ": expected a string");
  dst = it->get<std::string>();
}

inline void overlay_schedule(const json& j, GainSchedule& s, std::string_view where) {
  only_keys(j, where, {"breakpoints", "floor", "ceiling"});
  if (auto it = j.find("breakpoints"); it != j.end()) {
    if (!it->is_array()) throw ConfigError(std::string(where) + ".breakpoints: expected an array");
    s.breakpoints.clear();
    for (const auto& b : *it) {
      if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number())
        throw ConfigError(std::string(where) + ".breakpoints: expected [abs_error, gain] pairs");
      s.breakpoints.push_back({b[0].get<double>(), b[1].get<double>()});
    }
  }
  set(j, "floor", s.gain_floor, where);
  set(j, "ceiling", s.gain_ceiling, where);
}

inline void overlay_pid(const json& j, PidConfig& p, std::string_view where) {
  const std::string w(where);
  only_keys(j, where, {"kp", "ki", "kd", "ki_gain", "kd_gain", "reference_scale", "duty_min", "duty_max"});
  if (j.contains("kp")) overlay_schedule(j["kp"], p.kp_schedule, w + ".kp");
  if (j.contains("ki")) overlay_schedule(j["ki"], p.ki_schedule, w + ".ki");
  if (j.contains("kd")) overlay_schedule(j["kd"], p.kd_schedule, w + ".kd");
  set(j, "ki_gain", p.ki_gain, where);
  set(j, "kd_gain", p.kd_gain, where);
  set(j, "reference_scale", p.reference_scale, where);
  set(j, "duty_min", p.duty_min, where);
  set(j, "duty_max", p.duty_max, where);
}

}  // namespace detail

/// Parses a scenario document. Keys overlay the builtin named by "base"
/// (default cc_50); unknown keys are rejected.
inline ScenarioConfig parse_scenario(std::string_view text) {
  using detail::set;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  detail::only_keys(j, "scenario",
                    {"base", "name", "initial_soc", "duration", "dt_plant", "dt_ctrl", "initial_v_out", "source",
                     "converter", "precharge", "cell", "pack", "supervisor", "voltage_loop", "current_loop",
                     "transport"});
  std::string base = "cc_50";
  set(j, "base", base, "scenario");
  auto b = builtin_scenario(base);
  if (!b) throw ConfigError("scenario: unknown base \"" + base + "\"");
  ScenarioConfig s = *b;
  set(j, "name", s.name, "scenario");
  set(j, "initial_soc", s.initial_soc, "scenario");
  set(j, "duration", s.duration, "scenario");
  set(j, "dt_plant", s.dt_plant, "scenario");
  set(j, "dt_ctrl", s.dt_ctrl, "scenario");
  set(j, "initial_v_out", s.initial_v_out, "scenario");
  if (j.contains("source")) {
    const auto& o = j["source"];
    detail::only_keys(o, "source", {"v_source", "r_internal"});
    set(o, "v_source", s.source.v_source, "source");
    set(o, "r_internal", s.source.r_internal, "source");
  }
  if (j.contains("converter")) {
    const auto& o = j["converter"];
    detail::only_keys(o, "converter", {"inductance", "capacitance", "duty_min", "duty_max"});
    set(o, "inductance", s.converter.inductance, "converter");
    set(o, "capacitance", s.converter.capacitance, "converter");
    set(o, "duty_min", s.converter.duty_min, "converter");
    set(o, "duty_max", s.converter.duty_max, "converter");
  }
  if (j.contains("precharge")) {
    const auto& o = j["precharge"];
    detail::only_keys(o, "precharge", {"t_min", "v_match_tolerance"});
    set(o, "t_min", s.precharge.t_precharge_min, "precharge");
    set(o, "v_match_tolerance", s.precharge.v_match_tolerance, "precharge");
  }
  if (j.contains("cell")) {
    const auto& o = j["cell"];
    detail::only_keys(o, "cell", {"capacity", "v_max", "v_cutoff", "v_nominal", "r_cell"});
    set(o, "capacity", s.cell.capacity, "cell");
    set(o, "v_max", s.cell.v_max, "cell");
    set(o, "v_cutoff", s.cell.v_cutoff, "cell");
    set(o, "v_nominal", s.cell.v_nominal, "cell");
    set(o, "r_cell", s.cell.r_cell, "cell");
  }
  if (j.contains("pack")) {
    const auto& o = j["pack"];
    detail::only_keys(o, "pack", {"n_series", "n_parallel"});
    set(o, "n_series", s.pack.n_series, "pack");
    set(o, "n_parallel", s.pack.n_parallel, "pack");
  }
  if (j.contains("supervisor")) {
    const auto& o = j["supervisor"];
    auto& sup = s.controller.supervisor;
    detail::only_keys(o, "supervisor", {"i_cc_ref", "v_cv_ref", "cv_entry_fraction", "i_terminate"});
    set(o, "i_cc_ref", sup.i_cc_ref, "supervisor");
    set(o, "v_cv_ref", sup.v_cv_ref, "supervisor");
    set(o, "cv_entry_fraction", sup.cv_entry_fraction, "supervisor");
    set(o, "i_terminate", sup.i_terminate, "supervisor");
  }
  if (j.contains("voltage_loop")) detail::overlay_pid(j["voltage_loop"], s.controller.voltage_loop, "voltage_loop");
  if (j.contains("current_loop")) detail::overlay_pid(j["current_loop"], s.controller.current_loop, "current_loop");
  if (j.contains("transport")) {
    const auto& o = j["transport"];
    detail::only_keys(o, "transport", {"kind", "address"});
    std::string kind = s.transport.kind == TransportKind::tcp ? "tcp" : "inproc";
    set(o, "kind", kind, "transport");
    if (kind == "inproc")
      s.transport.kind = TransportKind::inproc;
    else if (kind == "tcp")
      s.transport.kind = TransportKind::tcp;
    else
      throw ConfigError("transport.kind: expected \"inproc\" or \"tcp\"");
    set(o, "address", s.transport.address, "transport");
  }
  s.validate();
  return s;
}

/// Builtin name or path to a scenario file.
inline ScenarioConfig load_scenario(const std::string& name_or_path) {
  if (auto b = builtin_scenario(name_or_path)) return *b;
  std::ifstream in(name_or_path, std::ios::binary);
  if (!in) throw ConfigError("scenario \"" + name_or_path + "\": not a builtin (cc_50, cv_90) and not a readable file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace chil::harness
