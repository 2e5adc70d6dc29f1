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

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "chil/control_types.hpp"
#include "chil/decimal.hpp"
#include "chil/error.hpp"

namespace chil::harness {

/// One row per controller exchange.
struct TraceRecord {
  double t = 0.0;
  double v_primary = 0.0;
  double v_secondary = 0.0;
  double i_primary = 0.0;
  double i_secondary = 0.0;
  double soc = 0.0;
  double duty = 0.0;
  ChargeMode mode = ChargeMode::precharge;
  double kp_active = 0.0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

using Trace = std::vector<TraceRecord>;

inline constexpr std::string_view kTraceHeader = "t,vp,vs,ip,is,soc,duty,mode,kp";

inline std::string trace_to_csv(const Trace& trace) {
  std::string out(kTraceHeader);
  out.push_back('\n');
  for (const auto& r : trace) {
    for (double x : {r.t, r.v_primary, r.v_secondary, r.i_primary, r.i_secondary, r.soc, r.duty}) {
      out += format_double(x);
      out.push_back(',');
    }
    out += to_string(r.mode);
    out.push_back(',');
    out += format_double(r.kp_active);
    out.push_back('\n');
  }
  return out;
}

inline void write_text_file(const std::string& path, std::string_view bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open \"" + path + "\" for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  f.close();
  if (!f) throw IoError("write to \"" + path + "\" failed");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open \"" + path + "\" for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_trace_csv(const Trace& trace, const std::string& path) { write_text_file(path, trace_to_csv(trace)); }

inline Trace trace_from_csv(std::string_view text) {
  Trace trace;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (line_no == 1) {
      if (line != kTraceHeader) throw IoError("trace csv: unexpected header \"" + std::string(line) + "\"");
      continue;
    }
    if (line.empty()) continue;

    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      const auto c = line.find(',', start);
      cells.push_back(line.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start));
      if (c == std::string_view::npos) break;
      start = c + 1;
    }
    auto fail = [&](const std::string& what) {
      return IoError("trace csv line " + std::to_string(line_no) + ": " + what);
    };
    if (cells.size() != 9) throw fail("expected 9 columns");
    double v[8];
    for (int k = 0; k < 8; ++k) {
      const auto cell = cells[k < 7 ? k : 8];
      auto d = parse_double(cell);
      if (!d) throw fail("bad number \"" + std::string(cell) + "\"");
      v[k] = *d;
    }
    auto mode = parse_charge_mode(cells[7]);
    if (!mode) throw fail("bad mode \"" + std::string(cells[7]) + "\"");
    trace.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], *mode, v[7]});
  }
  if (line_no == 0) throw IoError("trace csv: empty file");
  return trace;
}

inline Trace read_trace_csv(const std::string& path) { return trace_from_csv(read_text_file(path)); }

}  // namespace chil::harness
