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

// Minimal SVG line plots, one stacked panel per signal. Output bytes depend
// only on the trace.

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "chil/error.hpp"
#include "chil/harness/metrics.hpp"
#include "chil/harness/trace.hpp"

namespace chil::harness {

struct PlotOptions {
  int width = 900;
  int panel_height = 220;
  int max_columns = 2000;  // min/max decimation target
  double ref_v = 400.0;
  double ref_i = 23.0;
};

namespace detail {

inline std::string fx(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  std::string s = buf;
  return s == "-0.00" ? "0.00" : s;
}

inline std::string label_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

inline std::string_view unit_of(Signal s) {
  switch (s) {
    case Signal::vp:
    case Signal::vs: return "V";
    case Signal::ip:
    case Signal::is: return "A";
    default: return "-";
  }
}

// Indices to draw: all of them, or the min and max of each column bucket.
inline std::vector<std::size_t> decimate(const Trace& tr, Signal sig, int columns) {
  std::vector<std::size_t> idx;
  const std::size_t n = tr.size();
  const auto cols = static_cast<std::size_t>(columns);
  if (n <= 2 * cols) {
    for (std::size_t k = 0; k < n; ++k) idx.push_back(k);
    return idx;
  }
  for (std::size_t c = 0; c < cols; ++c) {
    const std::size_t lo = c * n / cols, hi = (c + 1) * n / cols;
    if (lo >= hi) continue;
    std::size_t imin = lo, imax = lo;
    for (std::size_t k = lo; k < hi; ++k) {
      const double v = signal_value(tr[k], sig);
      if (v < signal_value(tr[imin], sig)) imin = k;
      if (v > signal_value(tr[imax], sig)) imax = k;
    }
    idx.push_back(std::min(imin, imax));
    if (imin != imax) idx.push_back(std::max(imin, imax));
  }
  return idx;
}

}  // namespace detail

inline std::vector<Signal> parse_signal_list(const std::vector<std::string>& names) {
  if (names.empty()) throw UsageError("no signals selected; valid names: " + std::string(kSignalNames));
  std::vector<Signal> out;
  for (const auto& n : names) {
    auto s = parse_signal(n);
    if (!s) throw UsageError("unknown signal \"" + n + "\"; valid names: " + std::string(kSignalNames));
    out.push_back(*s);
  }
  return out;
}

inline std::string render_plot_svg(const Trace& trace, const std::vector<std::string>& signal_names,
                                   const PlotOptions& opt = {}) {
  const std::vector<Signal> signals = parse_signal_list(signal_names);
  if (trace.empty()) throw UsageError("cannot plot an empty trace");
  using detail::fx;

  const double ml = 80, mr = 20, mt = 20, mb = 40;
  const double pw = opt.width - ml - mr;
  const double ph = opt.panel_height - mt - mb;
  const double height = static_cast<double>(opt.panel_height) * static_cast<double>(signals.size());
  const double t0 = trace.front().t, t1 = trace.back().t > t0 ? trace.back().t : t0 + 1.0;
  auto xpix = [&](double t) { return ml + (t - t0) / (t1 - t0) * pw; };

  std::vector<std::pair<double, ChargeMode>> marks;
  for (std::size_t k = 1; k < trace.size(); ++k)
    if (trace[k].mode != trace[k - 1].mode) marks.emplace_back(trace[k].t, trace[k].mode);

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(opt.width) + "\" height=\"" +
       fx(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};
  for (std::size_t p = 0; p < signals.size(); ++p) {
    const Signal sig = signals[p];
    const double top = static_cast<double>(p) * opt.panel_height + mt;

    std::optional<double> ref;
    if (sig == Signal::vs || sig == Signal::vp) ref = opt.ref_v;
    if (sig == Signal::is) ref = opt.ref_i;

    double lo = signal_value(trace.front(), sig), hi = lo;
    for (const auto& r : trace) {
      lo = std::min(lo, signal_value(r, sig));
      hi = std::max(hi, signal_value(r, sig));
    }
    if (ref) {
      lo = std::min(lo, *ref);
      hi = std::max(hi, *ref);
    }
    if (hi - lo < 1e-12) {
      lo -= 1.0;
      hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    auto ypix = [&](double v) { return top + (hi - v) / (hi - lo) * ph; };

    s += "<g id=\"panel-" + std::string(to_string(sig)) + "\">\n";
    s += "<rect x=\"" + fx(ml) + "\" y=\"" + fx(top) + "\" width=\"" + fx(pw) + "\" height=\"" + fx(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fx(ml - 8) + "\" y=\"" + fx(top + 10) + "\" text-anchor=\"end\">" + detail::label_num(hi) +
         "</text>\n";
    s += "<text x=\"" + fx(ml - 8) + "\" y=\"" + fx(top + ph) + "\" text-anchor=\"end\">" + detail::label_num(lo) +
         "</text>\n";
    s += "<text x=\"16\" y=\"" + fx(top + ph / 2) + "\" transform=\"rotate(-90 16 " + fx(top + ph / 2) +
         ")\" text-anchor=\"middle\">" + std::string(to_string(sig)) + " [" + std::string(detail::unit_of(sig)) +
         "]</text>\n";
    s += "<text x=\"" + fx(ml) + "\" y=\"" + fx(top + ph + 14) + "\" text-anchor=\"start\">" + detail::label_num(t0) +
         "</text>\n";
    s += "<text x=\"" + fx(ml + pw) + "\" y=\"" + fx(top + ph + 14) + "\" text-anchor=\"end\">" +
         detail::label_num(t1) + "</text>\n";
    s += "<text x=\"" + fx(ml + pw / 2) + "\" y=\"" + fx(top + ph + 28) + "\" text-anchor=\"middle\">t [s]</text>\n";

    if (ref) {
      s += "<line class=\"reference\" x1=\"" + fx(ml) + "\" y1=\"" + fx(ypix(*ref)) + "\" x2=\"" + fx(ml + pw) +
           "\" y2=\"" + fx(ypix(*ref)) + "\" stroke=\"gray\" stroke-dasharray=\"6 3\"/>\n";
      s += "<text x=\"" + fx(ml + pw - 4) + "\" y=\"" + fx(ypix(*ref) - 4) + "\" text-anchor=\"end\" fill=\"gray\">" +
           detail::label_num(*ref) + " " + std::string(detail::unit_of(sig)) + "</text>\n";
    }
    for (const auto& [t, mode] : marks) {
      s += "<line class=\"mode\" x1=\"" + fx(xpix(t)) + "\" y1=\"" + fx(top) + "\" x2=\"" + fx(xpix(t)) + "\" y2=\"" +
           fx(top + ph) + "\" stroke=\"#999\" stroke-dasharray=\"2 2\"/>\n";
      s += "<text x=\"" + fx(xpix(t) + 3) + "\" y=\"" + fx(top + 12) + "\" fill=\"#555\">" +
           std::string(to_string(mode)) + "</text>\n";
    }

    s += "<polyline fill=\"none\" stroke=\"" + std::string(kColors[p % 7]) + "\" stroke-width=\"1\" points=\"";
    bool first = true;
    for (std::size_t k : detail::decimate(trace, sig, opt.max_columns)) {
      if (!first) s.push_back(' ');
      first = false;
      s += fx(xpix(trace[k].t)) + "," + fx(ypix(signal_value(trace[k], sig)));
    }
    s += "\"/>\n</g>\n";
  }
  s += "</svg>\n";
  return s;
}

inline void render_plot(const Trace& trace, const std::vector<std::string>& signals, const std::string& path,
                        const PlotOptions& opt = {}) {
  write_text_file(path, render_plot_svg(trace, signals, opt));
}

}  // namespace chil::harness
