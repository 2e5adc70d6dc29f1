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

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "chil/decimal.hpp"
#include "chil/error.hpp"
#include "chil/harness/trace.hpp"

namespace chil::harness {

enum class Signal { vp, vs, ip, is, soc, duty, kp };

inline constexpr std::string_view kSignalNames = "vp, vs, ip, is, soc, duty, kp";

inline std::optional<Signal> parse_signal(std::string_view s) {
  if (s == "vp") return Signal::vp;
  if (s == "vs") return Signal::vs;
  if (s == "ip") return Signal::ip;
  if (s == "is") return Signal::is;
  if (s == "soc") return Signal::soc;
  if (s == "duty") return Signal::duty;
  if (s == "kp") return Signal::kp;
  return std::nullopt;
}

inline std::string_view to_string(Signal s) {
  switch (s) {
    case Signal::vp: return "vp";
    case Signal::vs: return "vs";
    case Signal::ip: return "ip";
    case Signal::is: return "is";
    case Signal::soc: return "soc";
    case Signal::duty: return "duty";
    case Signal::kp: return "kp";
  }
  return "?";
}

inline double signal_value(const TraceRecord& r, Signal s) {
  switch (s) {
    case Signal::vp: return r.v_primary;
    case Signal::vs: return r.v_secondary;
    case Signal::ip: return r.i_primary;
    case Signal::is: return r.i_secondary;
    case Signal::soc: return r.soc;
    case Signal::duty: return r.duty;
    case Signal::kp: return r.kp_active;
  }
  return 0.0;
}

inline constexpr double kNeverSettled = std::numeric_limits<double>::infinity();

/// Peak is taken from the first sample at or above the reference onward;
/// a signal that never reaches the reference has no overshoot.
inline double compute_overshoot(std::span<const TraceRecord> trace, double reference, Signal sig) {
  if (trace.empty()) throw MetricsError("no samples");
  if (!(reference > 0.0)) throw MetricsError("reference must be > 0");
  auto it = std::find_if(trace.begin(), trace.end(), [&](const auto& r) { return signal_value(r, sig) >= reference; });
  if (it == trace.end()) return 0.0;
  double peak = reference;
  for (; it != trace.end(); ++it) peak = std::max(peak, signal_value(*it, sig));
  return 100.0 * std::max(0.0, peak - reference) / reference;
}

/// Time from t_event until the signal enters the band for good. Samples
/// before t_event are ignored. kNeverSettled if the last sample is outside.
inline double compute_settling_time(std::span<const TraceRecord> trace, double reference, double band_fraction,
                                    Signal sig, double t_event) {
  if (trace.empty()) throw MetricsError("no samples");
  if (!(band_fraction > 0.0)) throw MetricsError("band fraction must be > 0");
  auto first = std::find_if(trace.begin(), trace.end(), [&](const auto& r) { return r.t >= t_event; });
  if (first == trace.end()) throw MetricsError("event time lies beyond the last sample");
  const double tol = band_fraction * std::abs(reference);
  std::optional<double> settled_at;
  for (auto it = first; it != trace.end(); ++it) {
    const bool inside = std::abs(signal_value(*it, sig) - reference) <= tol;
    if (!inside)
      settled_at.reset();
    else if (!settled_at)
      settled_at = it->t;
  }
  if (!settled_at) return kNeverSettled;
  return *settled_at - t_event;
}

inline double compute_stabilization_time(std::span<const TraceRecord> trace, double reference, double band_fraction,
                                         Signal sig) {
  return compute_settling_time(trace, reference, band_fraction, sig, 0.0);
}

struct MetricsOptions {
  double ref_v = 400.0;
  double ref_i = 23.0;
  double band = 0.02;
};

struct MetricsReport {
  double overshoot_pct = 0.0;  // v_secondary, whole trace
  double peak_value = 0.0;     // max v_secondary
  std::optional<double> settling_time;       // i_secondary within the CC phase, from CC entry
  std::optional<double> stabilization_time;  // v_secondary before relay closure, from t = 0
  double steady_state_error = 0.0;           // last sample, active loop
  std::optional<double> cv_overshoot_pct;    // v_secondary from CV entry on
  std::map<ChargeMode, double> mode_transition_times;
};

inline MetricsReport compute_metrics(std::span<const TraceRecord> trace, const MetricsOptions& opt = {}) {
  if (trace.empty()) throw MetricsError("no samples");
  MetricsReport m;
  for (const auto& r : trace) m.mode_transition_times.try_emplace(r.mode, r.t);

  m.overshoot_pct = compute_overshoot(trace, opt.ref_v, Signal::vs);
  m.peak_value = trace.front().v_secondary;
  for (const auto& r : trace) m.peak_value = std::max(m.peak_value, r.v_secondary);

  auto not_pre = std::find_if(trace.begin(), trace.end(), [](const auto& r) { return r.mode != ChargeMode::precharge; });
  const auto n_pre = static_cast<std::size_t>(not_pre - trace.begin());
  if (n_pre > 0) m.stabilization_time = compute_stabilization_time(trace.first(n_pre), opt.ref_v, opt.band, Signal::vs);

  auto cc = std::find_if(trace.begin(), trace.end(), [](const auto& r) { return r.mode == ChargeMode::cc; });
  if (cc != trace.end()) {
    auto cc_end = std::find_if(cc, trace.end(), [](const auto& r) { return r.mode != ChargeMode::cc; });
    std::span<const TraceRecord> phase(cc, cc_end);
    m.settling_time = compute_settling_time(phase, opt.ref_i, opt.band, Signal::is, cc->t);
  }

  auto cv = std::find_if(trace.begin(), trace.end(), [](const auto& r) { return r.mode == ChargeMode::cv; });
  if (cv != trace.end()) m.cv_overshoot_pct = compute_overshoot(std::span<const TraceRecord>(cv, trace.end()), opt.ref_v, Signal::vs);

  const auto& last = trace.back();
  m.steady_state_error = last.mode == ChargeMode::cc ? opt.ref_i - last.i_secondary : opt.ref_v - last.v_secondary;
  return m;
}

namespace detail {
inline std::string metric_text(std::optional<double> v) {
  if (!v) return "n/a";
  if (std::isinf(*v)) return "inf";
  return format_double(*v);
}
}  // namespace detail

/// key=value lines, stable order.
inline std::string metrics_to_text(const MetricsReport& m) {
  std::string out;
  auto line = [&](std::string_view k, const std::string& v) {
    out += k;
    out.push_back('=');
    out += v;
    out.push_back('\n');
  };
  line("overshoot_pct", detail::metric_text(m.overshoot_pct));
  line("peak_value", detail::metric_text(m.peak_value));
  line("settling_time", detail::metric_text(m.settling_time));
  line("stabilization_time", detail::metric_text(m.stabilization_time));
  line("steady_state_error", detail::metric_text(m.steady_state_error));
  line("cv_overshoot_pct", detail::metric_text(m.cv_overshoot_pct));
  for (ChargeMode mode : {ChargeMode::precharge, ChargeMode::cc, ChargeMode::cv, ChargeMode::done}) {
    auto it = m.mode_transition_times.find(mode);
    line("t_" + std::string(to_string(mode)),
         detail::metric_text(it == m.mode_transition_times.end() ? std::nullopt : std::optional(it->second)));
  }
  return out;
}

}  // namespace chil::harness
