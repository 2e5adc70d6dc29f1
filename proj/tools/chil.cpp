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


// chil: command-line front end for the co-simulation harness.
//
// Exit codes: 0 ok, 1 other failure, 2 usage or configuration, 3 protocol,
// 4 numerical divergence.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chil/chil.hpp"

namespace {

using namespace chil;

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitUsage = 2;
constexpr int kExitProtocol = 3;
constexpr int kExitDivergence = 4;

int classify(std::exception_ptr ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const harness::RunAborted& e) {
    if (e.cause()) return classify(e.cause());
    return kExitOther;
  } catch (const UsageError&) {
    return kExitUsage;
  } catch (const ConfigError&) {
    return kExitUsage;
  } catch (const ProtocolError&) {
    return kExitProtocol;
  } catch (const DivergenceError&) {
    return kExitDivergence;
  } catch (...) {
    return kExitOther;
  }
}

void write_outputs(const harness::ScenarioResult& r, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  harness::write_trace_csv(r.trace, (dir / "trace.csv").string());
  std::string metrics;
  if (r.metrics)
    metrics = harness::metrics_to_text(*r.metrics);
  else
    metrics = "error=" + r.metrics_error + "\n";
  metrics += "termination=" + std::string(harness::to_string(r.termination)) + "\n";
  harness::write_text_file((dir / "metrics.txt").string(), metrics);
  if (!r.trace.empty())
    harness::render_plot(r.trace, {"vs", "is"}, (dir / "plot.svg").string());
  else
    std::cerr << "chil: empty trace, plot.svg not written\n";
}

void print_summary(const harness::ScenarioConfig& cfg, const harness::ScenarioResult& r) {
  std::cout << "scenario " << cfg.name << ": " << r.trace.size() << " samples, ended by "
            << harness::to_string(r.termination) << "\n";
  if (r.metrics)
    std::cout << harness::metrics_to_text(*r.metrics);
  else
    std::cout << "metrics unavailable: " << r.metrics_error << "\n";
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Controller-in-the-loop co-simulation of a boost-converter battery charger"};
  app.require_subcommand(1);

  std::string scenario = "cc_50", out_dir = "out", transport = "inproc", listen = "127.0.0.1:0";
  auto* run = app.add_subcommand("run", "Run a scenario and write trace.csv, metrics.txt, plot.svg");
  run->add_option("--scenario", scenario, "Builtin name (cc_50, cv_90) or path to a scenario file")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--transport", transport, "inproc or tcp")->check(CLI::IsMember({"inproc", "tcp"}));
  run->add_option("--listen", listen, "Plant listen address for --transport tcp (host:port)");

  std::string csv_path;
  double ref_v = 400.0, ref_i = 23.0, band = 0.02;
  auto* metrics = app.add_subcommand("metrics", "Compute metrics from a trace CSV");
  metrics->add_option("trace", csv_path, "Trace CSV")->required();
  metrics->add_option("--ref-v", ref_v, "Voltage reference [V]");
  metrics->add_option("--ref-i", ref_i, "Current reference [A]");
  metrics->add_option("--band", band, "Settling band as a fraction of the reference");

  std::string signals = "vs,is", svg_path;
  auto* plot = app.add_subcommand("plot", "Render an SVG plot of a trace CSV");
  plot->add_option("trace", csv_path, "Trace CSV")->required();
  plot->add_option("--signals", signals, "Comma-separated signal names");
  plot->add_option("-o,--output", svg_path, "Output SVG path")->required();

  double accept_timeout = 60.0;
  std::string serve_out;
  auto* serve_plant = app.add_subcommand("serve-plant", "Run the plant side and wait for an external controller");
  serve_plant->add_option("--scenario", scenario, "Builtin name or scenario file")->required();
  serve_plant->add_option("--listen", listen, "Listen address host:port")->required();
  serve_plant->add_option("--accept-timeout", accept_timeout, "Seconds to wait for the controller");
  serve_plant->add_option("--out", serve_out, "Also write trace.csv, metrics.txt, plot.svg here");

  std::string connect;
  unsigned pause_demo = 0;
  auto* serve_ctl = app.add_subcommand("serve-controller", "Run the reference controller against a listening plant");
  serve_ctl->add_option("--connect", connect, "Plant address host:port")->required();
  serve_ctl->add_option("--pause-demo", pause_demo, "PAUSE frames sent before every reply");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) {
      harness::ScenarioConfig cfg = harness::load_scenario(scenario);
      if (run->count("--transport")) {
        cfg.transport.kind = transport == "tcp" ? harness::TransportKind::tcp : harness::TransportKind::inproc;
      }
      if (run->count("--listen")) {
        if (cfg.transport.kind != harness::TransportKind::tcp) throw UsageError("--listen requires --transport tcp");
        cfg.transport.address = listen;
      }
      const harness::ScenarioResult r = harness::run_scenario(cfg);
      write_outputs(r, out_dir);
      print_summary(cfg, r);
    } else if (*metrics) {
      const harness::Trace tr = harness::read_trace_csv(csv_path);
      std::cout << harness::metrics_to_text(harness::compute_metrics(tr, {ref_v, ref_i, band}));
    } else if (*plot) {
      const harness::Trace tr = harness::read_trace_csv(csv_path);
      harness::render_plot(tr, split_csv(signals), svg_path);
    } else if (*serve_plant) {
      harness::ScenarioConfig cfg = harness::load_scenario(scenario);
      harness::TcpEndpoint ep(listen, false, {},
                              std::chrono::duration_cast<protocol::Clock::duration>(
                                  std::chrono::duration<double>(accept_timeout)));
      std::cerr << "chil: plant listening on port " << ep.port() << "\n";
      const harness::ScenarioResult r = harness::run_scenario(cfg, ep);
      if (!serve_out.empty()) write_outputs(r, serve_out);
      print_summary(cfg, r);
    } else if (*serve_ctl) {
      auto ch = protocol::tcp_connect(protocol::parse_endpoint(connect), std::chrono::seconds(10));
      const auto n = harness::run_reference_controller(*ch, {pause_demo});
      std::cout << "served " << n << " commands\n";
    }
  } catch (const harness::RunAborted& e) {
    std::cerr << "chil: run aborted after " << e.trace().size() << " samples: " << e.what() << "\n";
    return classify(std::current_exception());
  } catch (const std::exception& e) {
    std::cerr << "chil: " << e.what() << "\n";
    return classify(std::current_exception());
  }
  return kExitOk;
}
