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

#include "chil/battery.hpp"
#include "chil/control_types.hpp"
#include "chil/controller.hpp"
#include "chil/decimal.hpp"
#include "chil/error.hpp"
#include "chil/harness/metrics.hpp"
#include "chil/harness/plot.hpp"
#include "chil/harness/runner.hpp"
#include "chil/harness/scenario.hpp"
#include "chil/harness/trace.hpp"
#include "chil/plant.hpp"
#include "chil/protocol/channel.hpp"
#include "chil/protocol/codec.hpp"
#include "chil/protocol/frames.hpp"
#include "chil/protocol/link.hpp"
#include "chil/protocol/tcp.hpp"
