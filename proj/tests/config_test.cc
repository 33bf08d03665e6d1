// Copyright 2026 The SpikeStream Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "spikestream/config.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace spikestream {
namespace {

int error_line(const std::string& text) {
  try {
    run_config_from(ConfigDocument::parse(text, "t.toml"));
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

TEST(ConfigParseTest, ScalarsArraysComments) {
  ConfigDocument d = ConfigDocument::parse(
      "# header\n"
      "[a]\n"
      "i = -3  # trailing\n"
      "f = 2.5e-1\n"
      "b = true\n"
      "s = \"x # not a comment \\\"q\\\"\"\n"
      "arr = [1, 2, 3,]\n"
      "empty = []\n");
  EXPECT_EQ(*d.get_int("a", "i"), -3);
  EXPECT_DOUBLE_EQ(*d.get_float("a", "f"), 0.25);
  EXPECT_DOUBLE_EQ(*d.get_float("a", "i"), -3.0);
  EXPECT_TRUE(*d.get_bool("a", "b"));
  EXPECT_EQ(*d.get_string("a", "s"), "x # not a comment \"q\"");
  EXPECT_EQ(*d.get_int_array("a", "arr"), (std::vector<int64_t>{1, 2, 3}));
  EXPECT_TRUE(d.get_int_array("a", "empty")->empty());
  EXPECT_FALSE(d.get_int("a", "missing").has_value());
  EXPECT_FALSE(d.get_int("nope", "i").has_value());
  EXPECT_EQ(d.find("a", "b")->line, 5);
}

TEST(ConfigParseTest, SyntaxErrorsCarryLine) {
  const std::pair<const char*, int> cases[] = {
      {"[a]\nx = 1\ny 2\n", 3},
      {"x = 1\n", 1},
      {"[a]\n\n[a]\n", 3},
      {"[a]\nx = 1\nx = 2\n", 3},
      {"[a\n", 1},
      {"[a]\ns = \"open\n", 2},
      {"[a]\nv = [1, [2]]\n", 2},
      {"[a]\nv = 1 2\n", 2},
      {"[a]\nv = tru\n", 2},
      {"[a]\nbad key = 1\n", 2},
  };
  for (const auto& [text, line] : cases) {
    try {
      ConfigDocument::parse(text, "t.toml");
      ADD_FAILURE() << "no error for: " << text;
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.line(), line) << text;
      EXPECT_NE(std::string(e.what()).find("t.toml:" + std::to_string(line) + ":"), std::string::npos);
    }
  }
}

TEST(RunConfigTest, FullConfig) {
  RunConfig rc = run_config_from(ConfigDocument::parse(R"(
[network]
in_channels = 2
height = 5
width = 5
stem_channels = 6
stage_blocks = [2, 1]
stage_channels = [6, 8]
stage_downsample = [false, true]
block = "sn_residual"
g = "xor"
neuron = "LIF"
tau = 2.0
alpha = 3
time_steps = 6
num_classes = 3
readout = "spike"

[train]
epochs = 3
lr = 0.05
schedule = "step"
batch_size = 8
seed = 42
dual_stream = false
encoder = "poisson"
checkpoint = "out/m.spkc"

[data]
kind = "synth2"
n = 100
burst_rate = 0.8
)"));
  EXPECT_EQ(rc.network.stages.size(), 2u);
  EXPECT_TRUE(rc.network.stages[1].downsample);
  EXPECT_EQ(rc.network.stages[1].channels, 8);
  EXPECT_EQ(rc.network.block_kind, BlockKind::kSnResidual);
  EXPECT_EQ(rc.network.g, GFunction::kXor);
  EXPECT_EQ(rc.network.neuron.kind, NeuronKind::kLIF);
  EXPECT_FLOAT_EQ(rc.network.surrogate.alpha, 3.0f);
  EXPECT_EQ(rc.network.readout, Readout::kSpikeOnly);
  EXPECT_EQ(rc.train.epochs, 3);
  EXPECT_EQ(rc.train.schedule, Schedule::kStep);
  EXPECT_EQ(rc.train.seed, 42u);
  EXPECT_TRUE(rc.seed_given);
  EXPECT_FALSE(rc.train.dual_stream);
  EXPECT_EQ(rc.train.encoder.kind, EncoderKind::kPoisson);
  EXPECT_EQ(rc.train.encoder.time_steps, 6);
  EXPECT_EQ(rc.checkpoint, "out/m.spkc");
  EXPECT_EQ(rc.data.n, 100);
  Dataset d = load_dataset(rc.data, rc.network);
  EXPECT_EQ(d.inputs.shape(), (Shape{100, 6, 2, 5, 5}));
}

TEST(RunConfigTest, SemanticErrorsCarryLine) {
  EXPECT_EQ(error_line("[network]\ng = \"nand\"\n"), 2);
  EXPECT_EQ(error_line("[train]\n\nepochs = 1.5\n"), 3);
  EXPECT_EQ(error_line("[train]\nfoo = 1\n"), 2);
  EXPECT_EQ(error_line("[extra]\n"), 1);
  EXPECT_EQ(error_line("[network]\nstage_blocks = [1, 2]\nstage_channels = [4]\n"), 3);
  EXPECT_EQ(error_line("[data]\nkind = \"spkd\"\n"), 1);
  // Whole-network checks point at the section header.
  EXPECT_EQ(error_line("\n[network]\nheight = 4\nwidth = 4\nstage_blocks = [1]\n"
                       "stage_channels = [4]\nstage_downsample = [true]\n"),
            2);
  EXPECT_EQ(error_line("[train]\nlr = -1\n"), 1);
  EXPECT_EQ(error_line(""), -1);
}

TEST(RunConfigTest, MissingFile) {
  EXPECT_THROW(load_run_config("/nonexistent/run.toml"), ConfigError);
}

TEST(RunConfigTest, ShippedExampleParses) {
  const std::filesystem::path example = std::filesystem::path(SPIKESTREAM_SOURCE_DIR) / "configs/example.toml";
  RunConfig rc = load_run_config(example);
  EXPECT_NO_THROW(rc.network.validate());
}

}  // namespace
}  // namespace spikestream
