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


// Plugging a different control law into the harness.
//
// The endpoint below ignores the gain schedule and runs a plain fixed-gain
// PI on the charge current. Build target: custom_controller.

#include <algorithm>
#include <iostream>

#include "chil/chil.hpp"

namespace {

using namespace chil;

class FixedPiEndpoint final : public harness::ControllerEndpoint {
 public:
  void open(const harness::ScenarioConfig& cfg) override {
    dt_ = cfg.dt_ctrl;
    sup_ = cfg.controller.supervisor;
  }

  std::optional<protocol::CommandFrame> exchange(const protocol::MeasurementFrame& m) override {
    if (mode_ == ChargeMode::precharge && m.relay_closed) mode_ = ChargeMode::cc;
    if (mode_ == ChargeMode::cc && m.v_secondary >= sup_.v_cv_ref) mode_ = ChargeMode::cv;

    const bool current_loop = mode_ == ChargeMode::cc;
    const double e = current_loop ? (sup_.i_cc_ref - m.i_secondary) / 2300.0 : (sup_.v_cv_ref - m.v_secondary) / 400.0;
    integral_ += e * dt_;
    const double duty = std::clamp(0.5 * e + 200.0 * integral_, 0.0, 0.8);
    top_ += dt_;
    return protocol::CommandFrame{m.seq, true, mode_, top_, duty};
  }

  void close() override {}

 private:
  double dt_ = 1e-4;
  SupervisorConfig sup_;
  ChargeMode mode_ = ChargeMode::precharge;
  double integral_ = 0.0;
  double top_ = 0.0;
};

}  // namespace

int main() {
  harness::ScenarioConfig cfg = harness::builtin_cc_50();
  cfg.duration = 0.4;
  FixedPiEndpoint ep;
  const harness::ScenarioResult r = harness::run_scenario(cfg, ep);
  std::cout << r.trace.size() << " samples\n";
  if (r.metrics) std::cout << harness::metrics_to_text(*r.metrics);
  return 0;
}
