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

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "chil/control_types.hpp"

namespace chil::protocol {

inline constexpr int kProtocolVersion = 1;

/// Plant to controller, once per exchange.
struct MeasurementFrame {
  std::uint64_t seq = 0;
  double t_sim = 0.0;
  double v_primary = 0.0;
  double v_secondary = 0.0;
  double i_primary = 0.0;
  double i_secondary = 0.0;
  bool relay_closed = false;
  std::optional<std::string> event;

  friend bool operator==(const MeasurementFrame&, const MeasurementFrame&) = default;
};

/// Controller to plant; seq echoes the measurement it answers.
struct CommandFrame {
  std::uint64_t seq = 0;
  bool ready = true;
  ChargeMode mode = ChargeMode::precharge;
  double time_of_operation = 0.0;
  double duty = 0.0;

  friend bool operator==(const CommandFrame&, const CommandFrame&) = default;
};

enum class ControlKind { ready, pause, resume, end, error };

inline std::string_view to_string(ControlKind k) {
  switch (k) {
    case ControlKind::ready: return "READY";
    case ControlKind::pause: return "PAUSE";
    case ControlKind::resume: return "RESUME";
    case ControlKind::end: return "END";
    case ControlKind::error: return "ERROR";
  }
  return "?";
}

inline std::optional<ControlKind> parse_control_kind(std::string_view s) {
  if (s == "READY") return ControlKind::ready;
  if (s == "PAUSE") return ControlKind::pause;
  if (s == "RESUME") return ControlKind::resume;
  if (s == "END") return ControlKind::end;
  if (s == "ERROR") return ControlKind::error;
  return std::nullopt;
}

struct ControlFrame {
  ControlKind kind = ControlKind::ready;
  std::string detail;

  friend bool operator==(const ControlFrame&, const ControlFrame&) = default;
};

enum class Role { plant, controller };

inline std::string_view to_string(Role r) { return r == Role::plant ? "plant" : "controller"; }

/// Opens a session. The plant's hello carries the controller configuration
/// so an external controller needs no local config file.
struct HelloFrame {
  int version = kProtocolVersion;
  Role role = Role::plant;
  double dt_ctrl = 1e-4;
  std::string digest;
  std::optional<ControllerConfig> config;

  friend bool operator==(const HelloFrame&, const HelloFrame&) = default;
};

using Frame = std::variant<HelloFrame, MeasurementFrame, CommandFrame, ControlFrame>;

}  // namespace chil::protocol
