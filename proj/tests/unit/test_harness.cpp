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


#include <gtest/gtest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cmath>
#include <random>
#include <sstream>

#include "chil/harness/metrics.hpp"
#include "chil/harness/plot.hpp"
#include "chil/harness/scenario.hpp"
#include "chil/harness/trace.hpp"
#include "oracle.hpp"

namespace {

using namespace chil;
using namespace chil::harness;

Trace series(const std::vector<double>& vs, double dt = 1e-3) {
  Trace tr;
  for (std::size_t k = 0; k < vs.size(); ++k) {
    TraceRecord r;
    r.t = dt * static_cast<double>(k);
    r.v_secondary = vs[k];
    r.i_secondary = vs[k];
    tr.push_back(r);
  }
  return tr;
}

TEST(Overshoot, Arithmetic) {
  EXPECT_NEAR(compute_overshoot(series({390.0, 400.0, 404.39, 401.0}), 400.0, Signal::vs), 1.0975, 1e-9);
  EXPECT_NEAR(compute_overshoot(series({399.0, 403.7, 400.0}), 400.0, Signal::vs), 0.925, 1e-9);
  EXPECT_EQ(compute_overshoot(series({380.0, 400.0, 399.0}), 400.0, Signal::vs), 0.0);
  EXPECT_EQ(compute_overshoot(series({380.0, 390.0}), 400.0, Signal::vs), 0.0);
  EXPECT_NEAR(compute_overshoot(series({395.0, 399.0, 400.5, 402.0}), 400.0, Signal::vs), 0.5, 1e-12);
  EXPECT_THROW(compute_overshoot(Trace{}, 400.0, Signal::vs), MetricsError);
}

TEST(Overshoot, ClippedTraceIsZero) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(400.0, 8.0);
  for (int n = 0; n < 200; ++n) {
    std::vector<double> v(100);
    for (auto& x : v) x = std::min(400.0, noise(rng));
    const double os = compute_overshoot(series(v), 400.0, Signal::vs);
    EXPECT_EQ(os, 0.0);
    v[50] = 405.0;
    EXPECT_GE(compute_overshoot(series(v), 400.0, Signal::vs), 0.0);
  }
}

TEST(Settling, ConstantAtReference) {
  EXPECT_EQ(compute_settling_time(series(std::vector<double>(20, 23.0)), 23.0, 0.02, Signal::is, 0.005), 0.0);
}

TEST(Settling, DecayingOscillation) {
  std::vector<double> t, s;
  for (int k = 0; k <= 60; ++k) {
    const double tk = 1e-3 * k;
    t.push_back(tk);
    s.push_back(23.0 * (1.0 + 0.1 * std::exp(-tk / 11e-3) * std::cos(M_PI * (k + 1) / 2.0)));
  }
  const Trace tr = series(s);
  const double want = oracle::settling(t, s, 23.0, 0.02, 0.0);
  EXPECT_NEAR(want, 0.018, 1e-12);
  EXPECT_NEAR(compute_settling_time(tr, 23.0, 0.02, Signal::is, 0.0), want, 1e-15);
  EXPECT_NEAR(compute_stabilization_time(tr, 23.0, 0.02, Signal::is), want, 1e-15);
  // Measured from a later event.
  EXPECT_NEAR(compute_settling_time(tr, 23.0, 0.02, Signal::is, 0.005), want - 0.005, 1e-15);
}

TEST(Settling, RandomAgainstBruteForce) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n = 0; n < 300; ++n) {
    std::vector<double> t, s;
    for (int k = 0; k < 80; ++k) {
      t.push_back(1e-3 * k);
      s.push_back(100.0 + 5.0 * u(rng) * std::exp(-k / 15.0));
    }
    const double t0 = 1e-3 * static_cast<double>(rng() % 40);
    EXPECT_EQ(compute_settling_time(series(s), 100.0, 0.02, Signal::vs, t0), oracle::settling(t, s, 100.0, 0.02, t0));
  }
}

TEST(Settling, DivergingNeverSettles) {
  std::vector<double> s;
  for (int k = 0; k < 50; ++k) s.push_back(23.0 + 0.01 * std::exp(0.2 * k));
  EXPECT_EQ(compute_settling_time(series(s), 23.0, 0.02, Signal::is, 0.0), kNeverSettled);
  EXPECT_EQ(compute_stabilization_time(series(s), 23.0, 0.02, Signal::is), kNeverSettled);
}

TEST(Settling, Errors) {
  EXPECT_THROW(compute_settling_time(Trace{}, 23.0, 0.02, Signal::is, 0.0), MetricsError);
  EXPECT_THROW(compute_settling_time(series({23.0}), 23.0, 0.02, Signal::is, 1.0), MetricsError);
  EXPECT_THROW(compute_settling_time(series({23.0}), 23.0, 0.0, Signal::is, 0.0), MetricsError);
}

Trace phased() {
  // PRECHARGE for 4 samples, CC for 4, CV for 2.
  const double vs[] = {300, 380, 399, 400.5, 392, 395, 398, 400, 401, 400};
  const double is[] = {0, 0, 0, 0, 30, 24, 23.2, 23.0, 20, 15};
  const ChargeMode m[] = {ChargeMode::precharge, ChargeMode::precharge, ChargeMode::precharge, ChargeMode::precharge,
                          ChargeMode::cc,        ChargeMode::cc,        ChargeMode::cc,        ChargeMode::cc,
                          ChargeMode::cv,        ChargeMode::cv};
  Trace tr;
  for (int k = 0; k < 10; ++k) tr.push_back({0.01 * k, 300.0, vs[k], 30.0, is[k], 0.5, 0.3, m[k], 1.0});
  return tr;
}

TEST(Report, PhasedTrace) {
  const MetricsReport m = compute_metrics(phased());
  EXPECT_NEAR(m.overshoot_pct, 100.0 * 1.0 / 400.0, 1e-12);
  EXPECT_EQ(m.peak_value, 401.0);
  ASSERT_TRUE(m.stabilization_time);
  EXPECT_NEAR(*m.stabilization_time, 0.02, 1e-12);
  ASSERT_TRUE(m.settling_time);
  EXPECT_NEAR(*m.settling_time, 0.02, 1e-12);
  ASSERT_TRUE(m.cv_overshoot_pct);
  EXPECT_NEAR(*m.cv_overshoot_pct, 0.25, 1e-12);
  EXPECT_EQ(m.steady_state_error, 0.0);
  EXPECT_EQ(m.mode_transition_times.at(ChargeMode::cc), 0.04);
  EXPECT_EQ(m.mode_transition_times.at(ChargeMode::cv), 0.08);
  EXPECT_FALSE(m.mode_transition_times.contains(ChargeMode::done));
  EXPECT_THROW(compute_metrics(Trace{}), MetricsError);
  const std::string text = metrics_to_text(m);
  EXPECT_NE(text.find("stabilization_time=0.02\n"), std::string::npos) << text;
  EXPECT_NE(text.find("settling_time=0.0199999"), std::string::npos) << text;
  EXPECT_NE(text.find("t_DONE=n/a\n"), std::string::npos) << text;
}

TEST(TraceCsv, EmptyIsHeaderOnly) { EXPECT_EQ(trace_to_csv({}), "t,vp,vs,ip,is,soc,duty,mode,kp\n"); }

TEST(TraceCsv, KnownRows) {
  const Trace tr = {{0.0, 300.0, 300.0, 0.0, 0.0, 0.5, 0.8, ChargeMode::precharge, 1.0},
                    {0.20001, 291.9, 399.2, 32.4, 55.75, 0.5000001, 0.26983381, ChargeMode::cc, 0.05}};
  EXPECT_EQ(trace_to_csv(tr),
            "t,vp,vs,ip,is,soc,duty,mode,kp\n"
            "0.0,300.0,300.0,0.0,0.0,0.5,0.8,PRECHARGE,1.0\n"
            "0.20001,291.9,399.2,32.4,55.75,0.5000001,0.26983381,CC,0.05\n");
}

TEST(TraceCsv, RoundTrip) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-500.0, 500.0);
  Trace tr;
  for (int k = 0; k < 2000; ++k)
    tr.push_back({1e-4 * k, u(rng), u(rng), u(rng), u(rng), u(rng) / 1000.0, u(rng) / 1000.0,
                  static_cast<ChargeMode>(rng() % 4), u(rng)});
  EXPECT_EQ(trace_from_csv(trace_to_csv(tr)), tr);
}

TEST(TraceCsv, RejectsGarbage) {
  EXPECT_THROW(trace_from_csv(""), IoError);
  EXPECT_THROW(trace_from_csv("a,b\n"), IoError);
  EXPECT_THROW(trace_from_csv("t,vp,vs,ip,is,soc,duty,mode,kp\n1,2,3\n"), IoError);
  EXPECT_THROW(trace_from_csv("t,vp,vs,ip,is,soc,duty,mode,kp\n0,0,0,0,0,0,0,XX,0\n"), IoError);
  EXPECT_THROW(trace_from_csv("t,vp,vs,ip,is,soc,duty,mode,kp\n0,0,0,x,0,0,0,CC,0\n"), IoError);
  EXPECT_THROW(read_trace_csv("/nonexistent/trace.csv"), IoError);
  EXPECT_THROW(write_trace_csv({}, "/nonexistent/dir/trace.csv"), IoError);
}

int count_tag(const boost::property_tree::ptree& node, const std::string& tag) {
  int n = 0;
  for (const auto& [k, child] : node) n += (k == tag) + count_tag(child, tag);
  return n;
}

TEST(Plot, WellFormedAndStructured) {
  const Trace tr = phased();
  const std::string svg = render_plot_svg(tr, {"vs", "is"});
  std::istringstream in(svg);
  boost::property_tree::ptree doc;
  ASSERT_NO_THROW(boost::property_tree::read_xml(in, doc));
  EXPECT_EQ(count_tag(doc, "polyline"), 2);
  EXPECT_NE(svg.find("t [s]"), std::string::npos);
  EXPECT_NE(svg.find("vs [V]"), std::string::npos);
  EXPECT_NE(svg.find("is [A]"), std::string::npos);
  EXPECT_NE(svg.find(">400 V<"), std::string::npos);
  EXPECT_NE(svg.find(">23 A<"), std::string::npos);
  EXPECT_NE(svg.find(">CC<"), std::string::npos);
  EXPECT_NE(svg.find(">CV<"), std::string::npos);
  EXPECT_EQ(render_plot_svg(tr, {"vs", "is"}), svg);
}

TEST(Plot, Decimates) {
  Trace tr;
  for (int k = 0; k < 30000; ++k) tr.push_back({1e-4 * k, 0, std::sin(k * 0.01), 0, 0, 0, 0, ChargeMode::cc, 0});
  const std::string svg = render_plot_svg(tr, {"vs"});
  const auto a = svg.find("points=\""), b = svg.find('"', a + 8);
  const std::string pts = svg.substr(a + 8, b - a - 8);
  const auto n = std::count(pts.begin(), pts.end(), ' ') + 1;
  EXPECT_LE(n, 4000);
  EXPECT_GE(n, 2000);
}

TEST(Plot, SignalErrors) {
  try {
    render_plot_svg(phased(), {"vs", "bogus"});
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("vp, vs, ip, is, soc, duty, kp"), std::string::npos);
  }
  EXPECT_THROW(render_plot_svg(phased(), {}), UsageError);
  EXPECT_THROW(render_plot_svg({}, {"vs"}), UsageError);
}

TEST(Scenario, Builtins) {
  const ScenarioConfig a = *builtin_scenario("cc_50");
  EXPECT_EQ(a.initial_soc, 0.5);
  EXPECT_EQ(a.dt_plant, 1e-5);
  EXPECT_EQ(a.dt_ctrl, 1e-4);
  EXPECT_NO_THROW(a.validate());
  const ScenarioConfig b = *builtin_scenario("cv_90");
  EXPECT_EQ(b.initial_soc, 0.9);
  EXPECT_FALSE(builtin_scenario("nope"));
}

TEST(Scenario, OverlayDocument) {
  const ScenarioConfig s = parse_scenario(R"({
    "base": "cv_90", "name": "custom", "duration": 0.5,
    "converter": {"inductance": 1e-3},
    "current_loop": {"ki_gain": 1500, "kp": {"floor": 0.1}},
    "supervisor": {"cv_entry_fraction": 0.99},
    "transport": {"kind": "tcp", "address": "127.0.0.1:6000"}
  })");
  EXPECT_EQ(s.name, "custom");
  EXPECT_EQ(s.initial_soc, 0.9);
  EXPECT_EQ(s.duration, 0.5);
  EXPECT_EQ(s.converter.inductance, 1e-3);
  EXPECT_EQ(s.converter.capacitance, 470e-6);
  EXPECT_EQ(s.controller.current_loop.ki_gain, 1500.0);
  EXPECT_EQ(s.controller.current_loop.kp_schedule.gain_floor, 0.1);
  EXPECT_EQ(s.controller.current_loop.kp_schedule.breakpoints.size(), 2u);
  EXPECT_EQ(s.controller.supervisor.cv_entry_fraction, 0.99);
  EXPECT_EQ(s.transport.kind, TransportKind::tcp);
}

TEST(Scenario, Rejections) {
  EXPECT_THROW(parse_scenario("{\"duraton\": 1}"), ConfigError);
  EXPECT_THROW(parse_scenario("{\"duration\": \"1\"}"), ConfigError);
  EXPECT_THROW(parse_scenario("{\"duration\": -1}"), ConfigError);
  EXPECT_THROW(parse_scenario("{\"dt_ctrl\": 2.5e-5}"), ConfigError);
  EXPECT_THROW(parse_scenario("{\"initial_soc\": 1.5}"), ConfigError);
  EXPECT_THROW(parse_scenario("{\"base\": \"cc_99\"}"), ConfigError);
  EXPECT_THROW(parse_scenario("{\"transport\": {\"kind\": \"usb\"}}"), ConfigError);
  EXPECT_THROW(parse_scenario("{\"cell\": {\"capacity\": 0}}"), ConfigError);
  EXPECT_THROW(parse_scenario("not json"), ConfigError);
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), ConfigError);
}

}  // namespace
