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

#include <bit>
#include <random>
#include <string>

#include "chil/protocol/codec.hpp"
#include "generators.hpp"

namespace {

using namespace chil;
using namespace chil::protocol;

TEST(Codec, ZeroMeasurementLine) {
  const std::string line = encode_frame(MeasurementFrame{});
  EXPECT_EQ(line,
            "{\"type\":\"meas\",\"seq\":0,\"t\":0.0,\"vp\":0.0,\"vs\":0.0,\"ip\":0.0,\"is\":0.0,"
            "\"relay\":false,\"event\":null}\n");
  EXPECT_EQ(std::get<MeasurementFrame>(decode_frame(line)), MeasurementFrame{});
}

TEST(Codec, CommandLineLayout) {
  const CommandFrame c{7, true, ChargeMode::cc, 0.0123, 0.26983381};
  EXPECT_EQ(encode_frame(c), "{\"type\":\"cmd\",\"seq\":7,\"ready\":true,\"mode\":\"CC\",\"top\":0.0123,\"duty\":0.26983381}\n");
}

TEST(Codec, ControlAndEndLines) {
  EXPECT_EQ(encode_frame(ControlFrame{ControlKind::pause, ""}), "{\"type\":\"ctl\",\"kind\":\"PAUSE\",\"detail\":\"\"}\n");
  EXPECT_EQ(encode_frame(ControlFrame{ControlKind::end, "bye"}), "{\"type\":\"end\",\"detail\":\"bye\"}\n");
  EXPECT_EQ(std::get<ControlFrame>(decode_frame("{\"type\":\"end\"}\n")).kind, ControlKind::end);
  EXPECT_EQ(std::get<ControlFrame>(decode_frame("{\"type\":\"ctl\",\"kind\":\"END\",\"detail\":\"\"}")).kind,
            ControlKind::end);
}

TEST(Codec, DutyRoundTripsBitExact) {
  const double duty = 0.26983381224587412;
  const auto back = std::get<CommandFrame>(decode_frame(encode_frame(CommandFrame{3, true, ChargeMode::cc, 1.0, duty})));
  EXPECT_EQ(std::bit_cast<std::uint64_t>(back.duty), std::bit_cast<std::uint64_t>(duty));
}

TEST(Codec, MissingSeqIsNamed) {
  try {
    decode_frame("{\"type\":\"meas\",\"t\":0.0,\"vp\":0.0,\"vs\":0.0,\"ip\":0.0,\"is\":0.0,\"relay\":false}\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("\"seq\""), std::string::npos) << e.what();
  }
}

TEST(Codec, MalformedLineReportsOffset) {
  try {
    decode_frame("{\"type\":\"meas\",\"seq\":}\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 21u);
  }
  EXPECT_THROW(decode_frame("{\"type\":\"cmd\",\"seq\":1"), ParseError);
  EXPECT_THROW(decode_frame("[1,2]\n"), ParseError);
  EXPECT_THROW(decode_frame("{\"type\":\"cmd\"}\n{\"type\":\"cmd\"}\n"), ParseError);
}

TEST(Codec, WrongFieldTypes) {
  EXPECT_THROW(decode_frame("{\"type\":\"cmd\",\"seq\":-1,\"ready\":true,\"mode\":\"CC\",\"top\":0,\"duty\":0}"), ParseError);
  EXPECT_THROW(decode_frame("{\"type\":\"cmd\",\"seq\":1,\"ready\":1,\"mode\":\"CC\",\"top\":0,\"duty\":0}"), ParseError);
  EXPECT_THROW(decode_frame("{\"type\":\"cmd\",\"seq\":1,\"ready\":true,\"mode\":\"XX\",\"top\":0,\"duty\":0}"), ParseError);
}

TEST(Codec, UnknownTypeIsUnsupported) {
  EXPECT_THROW(decode_frame("{\"type\":\"telemetry\",\"seq\":1}\n"), UnsupportedFrameError);
}

TEST(Codec, UnknownFieldsIgnored) {
  const auto f = decode_frame(
      "{\"type\":\"cmd\",\"seq\":4,\"ready\":false,\"mode\":\"CV\",\"top\":2.5,\"duty\":0.5,\"extra\":[1,{\"a\":2}]}\n");
  EXPECT_EQ(std::get<CommandFrame>(f), (CommandFrame{4, false, ChargeMode::cv, 2.5, 0.5}));
}

TEST(Codec, EncodeRejectsInvalid) {
  EXPECT_THROW(encode_frame(CommandFrame{0, true, ChargeMode::cc, 0.0, 1.0}), EncodeError);
  EXPECT_THROW(encode_frame(CommandFrame{0, true, ChargeMode::cc, 0.0, -0.1}), EncodeError);
  MeasurementFrame m;
  m.v_secondary = std::nan("");
  EXPECT_THROW(encode_frame(m), EncodeError);
}

TEST(Codec, HelloCarriesConfig) {
  const ControllerConfig cfg = default_controller_config();
  const HelloFrame h{kProtocolVersion, Role::plant, 1e-4, config_digest(cfg), cfg};
  const auto back = std::get<HelloFrame>(decode_frame(encode_frame(h)));
  EXPECT_EQ(back, h);
  EXPECT_EQ(back.digest.size(), 16u);
  EXPECT_EQ(config_digest(*back.config), back.digest);
}

TEST(Codec, DigestTracksConfig) {
  ControllerConfig a = default_controller_config(), b = a;
  EXPECT_EQ(config_digest(a), config_digest(b));
  b.current_loop.ki_gain += 1.0;
  EXPECT_NE(config_digest(a), config_digest(b));
}

TEST(Codec, RandomFramesRoundTrip) {
  std::mt19937_64 rng(2024);
  for (int n = 0; n < 100000; ++n) {
    const Frame f = gen::frame(rng);
    const std::string line = encode_frame(f);
    ASSERT_EQ(line.find('\n'), line.size() - 1);
    const Frame g = decode_frame(line);
    ASSERT_EQ(f, g) << line;
    ASSERT_EQ(encode_frame(g), line);
  }
}

}  // namespace
