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

// Newline-delimited JSON records. Encoding is hand-rolled so the bytes are
// canonical (fixed key order, no whitespace, shortest round-trip numbers);
// decoding goes through nlohmann::json and ignores unknown keys.

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <variant>

#include "chil/decimal.hpp"
#include "chil/error.hpp"
#include "chil/protocol/frames.hpp"
#include "json.hpp"

namespace chil::protocol {

namespace detail {

class ObjectWriter {
 public:
  ObjectWriter() { out_.push_back('{'); }

  ObjectWriter& num(std::string_view key, double v) {
    this->key(key);
    out_ += format_double(v);
    return *this;
  }
  ObjectWriter& integer(std::string_view key, std::uint64_t v) {
    this->key(key);
    out_ += std::to_string(v);
    return *this;
  }
  ObjectWriter& integer(std::string_view key, int v) {
    this->key(key);
    out_ += std::to_string(v);
    return *this;
  }
  ObjectWriter& boolean(std::string_view key, bool v) {
    this->key(key);
    out_ += v ? "true" : "false";
    return *this;
  }
  ObjectWriter& str(std::string_view key, std::string_view v) {
    this->key(key);
    quote(v);
    return *this;
  }
  ObjectWriter& null(std::string_view key) {
    this->key(key);
    out_ += "null";
    return *this;
  }
  ObjectWriter& raw(std::string_view key, std::string_view json) {
    this->key(key);
    out_ += json;
    return *this;
  }

  std::string finish() {
    out_.push_back('}');
    return std::move(out_);
  }

 private:
  void key(std::string_view k) {
    if (!first_) out_.push_back(',');
    first_ = false;
    quote(k);
    out_.push_back(':');
  }

  void quote(std::string_view s) {
    out_.push_back('"');
    for (unsigned char c : s) {
      switch (c) {
        case '"': out_ += "\\\""; break;
        case '\\': out_ += "\\\\"; break;
        case '\n': out_ += "\\n"; break;
        case '\r': out_ += "\\r"; break;
        case '\t': out_ += "\\t"; break;
        default:
          if (c < 0x20) {
            char esc[8];
            std::snprintf(esc, sizeof(esc), "\\u%04x", c);
            out_ += esc;
          } else {
            out_.push_back(static_cast<char>(c));
          }
      }
    }
    out_.push_back('"');
  }

  std::string out_;
  bool first_ = true;
};

inline std::string encode_schedule(const GainSchedule& s) {
  std::string bps = "[";
  for (std::size_t k = 0; k < s.breakpoints.size(); ++k) {
    if (k) bps.push_back(',');
    bps += "[" + format_double(s.breakpoints[k].abs_error) + "," + format_double(s.breakpoints[k].gain) + "]";
  }
  bps.push_back(']');
  return ObjectWriter{}.raw("breakpoints", bps).num("floor", s.gain_floor).num("ceiling", s.gain_ceiling).finish();
}

inline std::string encode_pid(const PidConfig& p) {
  return ObjectWriter{}
      .raw("kp", encode_schedule(p.kp_schedule))
      .raw("ki", encode_schedule(p.ki_schedule))
      .raw("kd", encode_schedule(p.kd_schedule))
      .num("ki_gain", p.ki_gain)
      .num("kd_gain", p.kd_gain)
      .num("reference_scale", p.reference_scale)
      .num("duty_min", p.duty_min)
      .num("duty_max", p.duty_max)
      .finish();
}

using json = nlohmann::json;

[[noreturn]] inline void missing(std::string_view field, std::size_t offset) {
  throw ParseError(offset, "missing required field \"" + std::string(field) + "\"");
}

[[noreturn]] inline void bad_type(std::string_view field, std::size_t offset, std::string_view want) {
  throw ParseError(offset, "field \"" + std::string(field) + "\" must be " + std::string(want));
}

inline const json& field(const json& obj, std::string_view name, std::size_t off) {
  auto it = obj.find(name);
  if (it == obj.end()) missing(name, off);
  return *it;
}

inline double get_num(const json& obj, std::string_view name, std::size_t off) {
  const json& v = field(obj, name, off);
  if (!v.is_number()) bad_type(name, off, "a number");
  return v.get<double>();
}

inline std::uint64_t get_uint(const json& obj, std::string_view name, std::size_t off) {
  const json& v = field(obj, name, off);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  bad_type(name, off, "a non-negative integer");
}

inline bool get_bool(const json& obj, std::string_view name, std::size_t off) {
  const json& v = field(obj, name, off);
  if (!v.is_boolean()) bad_type(name, off, "a boolean");
  return v.get<bool>();
}

inline std::string get_str(const json& obj, std::string_view name, std::size_t off) {
  const json& v = field(obj, name, off);
  if (!v.is_string()) bad_type(name, off, "a string");
  return v.get<std::string>();
}

inline GainSchedule decode_schedule(const json& j, std::size_t off) {
  if (!j.is_object()) bad_type("schedule", off, "an object");
  GainSchedule s;
  const json& bps = field(j, "breakpoints", off);
  if (!bps.is_array()) bad_type("breakpoints", off, "an array");
  for (const json& b : bps) {
    if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number())
      bad_type("breakpoints", off, "an array of [abs_error, gain] pairs");
    s.breakpoints.push_back({b[0].get<double>(), b[1].get<double>()});
  }
  s.gain_floor = get_num(j, "floor", off);
  s.gain_ceiling = get_num(j, "ceiling", off);
  return s;
}

inline PidConfig decode_pid(const json& j, std::size_t off) {
  if (!j.is_object()) bad_type("loop", off, "an object");
  PidConfig p;
  p.kp_schedule = decode_schedule(field(j, "kp", off), off);
  p.ki_schedule = decode_schedule(field(j, "ki", off), off);
  p.kd_schedule = decode_schedule(field(j, "kd", off), off);
  p.ki_gain = get_num(j, "ki_gain", off);
  p.kd_gain = get_num(j, "kd_gain", off);
  p.reference_scale = get_num(j, "reference_scale", off);
  p.duty_min = get_num(j, "duty_min", off);
  p.duty_max = get_num(j, "duty_max", off);
  return p;
}

}  // namespace detail

/// Canonical single-line JSON for a controller configuration (no newline).
inline std::string encode_controller_config(const ControllerConfig& c) {
  const auto& s = c.supervisor;
  const std::string sup = detail::ObjectWriter{}
                              .num("i_cc_ref", s.i_cc_ref)
                              .num("v_cv_ref", s.v_cv_ref)
                              .num("cv_entry_fraction", s.cv_entry_fraction)
                              .num("i_terminate", s.i_terminate)
                              .finish();
  return detail::ObjectWriter{}
      .raw("supervisor", sup)
      .raw("voltage_loop", detail::encode_pid(c.voltage_loop))
      .raw("current_loop", detail::encode_pid(c.current_loop))
      .finish();
}

inline ControllerConfig decode_controller_config(const nlohmann::json& j, std::size_t off = 0) {
  if (!j.is_object()) detail::bad_type("config", off, "an object");
  ControllerConfig c;
  const auto& s = detail::field(j, "supervisor", off);
  if (!s.is_object()) detail::bad_type("supervisor", off, "an object");
  c.supervisor.i_cc_ref = detail::get_num(s, "i_cc_ref", off);
  c.supervisor.v_cv_ref = detail::get_num(s, "v_cv_ref", off);
  c.supervisor.cv_entry_fraction = detail::get_num(s, "cv_entry_fraction", off);
  c.supervisor.i_terminate = detail::get_num(s, "i_terminate", off);
  c.voltage_loop = detail::decode_pid(detail::field(j, "voltage_loop", off), off);
  c.current_loop = detail::decode_pid(detail::field(j, "current_loop", off), off);
  return c;
}

/// FNV-1a 64 over the canonical config text, as 16 lowercase hex digits.
inline std::string config_digest(const ControllerConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : encode_controller_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string encode_frame(const MeasurementFrame& m) {
  detail::ObjectWriter w;
  w.str("type", "meas")
      .integer("seq", m.seq)
      .num("t", m.t_sim)
      .num("vp", m.v_primary)
      .num("vs", m.v_secondary)
      .num("ip", m.i_primary)
      .num("is", m.i_secondary)
      .boolean("relay", m.relay_closed);
  if (m.event)
    w.str("event", *m.event);
  else
    w.null("event");
  return w.finish() + "\n";
}

inline std::string encode_frame(const CommandFrame& c) {
  if (!(c.duty >= 0.0 && c.duty < 1.0)) throw EncodeError("cmd: duty outside [0, 1)");
  return detail::ObjectWriter{}
             .str("type", "cmd")
             .integer("seq", c.seq)
             .boolean("ready", c.ready)
             .str("mode", to_string(c.mode))
             .num("top", c.time_of_operation)
             .num("duty", c.duty)
             .finish() +
         "\n";
}

inline std::string encode_frame(const ControlFrame& c) {
  if (c.kind == ControlKind::end) return detail::ObjectWriter{}.str("type", "end").str("detail", c.detail).finish() + "\n";
  return detail::ObjectWriter{}.str("type", "ctl").str("kind", to_string(c.kind)).str("detail", c.detail).finish() + "\n";
}

inline std::string encode_frame(const HelloFrame& h) {
  detail::ObjectWriter w;
  w.str("type", "hello")
      .integer("version", h.version)
      .str("role", to_string(h.role))
      .num("dt_ctrl", h.dt_ctrl)
      .str("digest", h.digest);
  if (h.config) w.raw("config", encode_controller_config(*h.config));
  return w.finish() + "\n";
}

inline std::string encode_frame(const Frame& f) {
  return std::visit([](const auto& x) { return encode_frame(x); }, f);
}

/// Decodes one record. A single trailing newline is accepted and stripped.
inline Frame decode_frame(std::string_view line) {
  using detail::get_bool;
  using detail::get_num;
  using detail::get_str;
  using detail::get_uint;
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (line.find('\n') != std::string_view::npos)
    throw ParseError(line.find('\n'), "embedded newline in record");

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line.begin(), line.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.byte > 0 ? e.byte - 1 : 0, "malformed record");
  }
  const std::size_t end = line.size();
  if (!j.is_object()) throw ParseError(0, "record is not an object");

  const std::string type = get_str(j, "type", end);
  if (type == "meas") {
    MeasurementFrame m;
    m.seq = get_uint(j, "seq", end);
    m.t_sim = get_num(j, "t", end);
    m.v_primary = get_num(j, "vp", end);
    m.v_secondary = get_num(j, "vs", end);
    m.i_primary = get_num(j, "ip", end);
    m.i_secondary = get_num(j, "is", end);
    m.relay_closed = get_bool(j, "relay", end);
    if (auto it = j.find("event"); it != j.end() && !it->is_null()) {
      if (!it->is_string()) detail::bad_type("event", end, "a string or null");
      m.event = it->get<std::string>();
    }
    return m;
  }
  if (type == "cmd") {
    CommandFrame c;
    c.seq = get_uint(j, "seq", end);
    c.ready = get_bool(j, "ready", end);
    const std::string mode = get_str(j, "mode", end);
    auto pm = parse_charge_mode(mode);
    if (!pm) throw ParseError(end, "unknown mode \"" + mode + "\"");
    c.mode = *pm;
    c.time_of_operation = get_num(j, "top", end);
    c.duty = get_num(j, "duty", end);
    return c;
  }
  if (type == "ctl") {
    const std::string kind = get_str(j, "kind", end);
    auto pk = parse_control_kind(kind);
    if (!pk) throw ParseError(end, "unknown control kind \"" + kind + "\"");
    ControlFrame c{*pk, {}};
    if (auto it = j.find("detail"); it != j.end() && it->is_string()) c.detail = it->get<std::string>();
    return c;
  }
  if (type == "end") {
    ControlFrame c{ControlKind::end, {}};
    if (auto it = j.find("detail"); it != j.end() && it->is_string()) c.detail = it->get<std::string>();
    return c;
  }
  if (type == "hello") {
    HelloFrame h;
    h.version = static_cast<int>(get_uint(j, "version", end));
    const std::string role = get_str(j, "role", end);
    if (role == "plant")
      h.role = Role::plant;
    else if (role == "controller")
      h.role = Role::controller;
    else
      throw ParseError(end, "unknown role \"" + role + "\"");
    h.dt_ctrl = get_num(j, "dt_ctrl", end);
    h.digest = get_str(j, "digest", end);
    if (auto it = j.find("config"); it != j.end() && !it->is_null()) h.config = decode_controller_config(*it, end);
    return h;
  }
  throw UnsupportedFrameError("unsupported frame type \"" + type + "\"");
}

}  // namespace chil::protocol
