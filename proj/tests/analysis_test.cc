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

#include "spikestream/analysis.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

namespace spikestream {
namespace {

const double kSilentFactor = 1.0 / (1.0 + std::numbers::pi * std::numbers::pi);

TEST(GradProbeTest, SnResidualDecaysBySurrogatePerBlock) {
  ProbeConfig c;
  c.depth = 8;
  c.kind = BlockKind::kSnResidual;
  c.with_aap = false;
  c.input_rate = 0.0f;
  ProbeResult r = grad_probe(c);
  ASSERT_EQ(r.amplitude.size(), 8u);
  EXPECT_TRUE(r.accumulation_amplitude.empty());
  for (int l = 1; l < 8; ++l) {
    EXPECT_NEAR(r.amplitude[l - 1] / r.amplitude[l], kSilentFactor, 1e-4) << l;
  }
  // End to end over eight blocks.
  EXPECT_NEAR(r.amplitude[0] / r.amplitude[7], std::pow(kSilentFactor, 7), 1e-6);
}

TEST(GradProbeTest, DecayMatchesSurrogateAtRealizedInput) {
  // Mixed firing: each element decays by sigma'(s_l + o_{l-1} - V_th) per block.
  ProbeConfig c;
  c.depth = 5;
  c.kind = BlockKind::kSnResidual;
  c.with_aap = false;
  c.seed = 4;
  const NetworkConfig nc = probe_network_config(c);
  Network net = Network::build(nc, c.seed);
  Rng rng(9);
  Tensor x({1, c.batch, c.channels, c.spatial, c.spatial});
  for (float& v : x.data()) v = rng.uniform() < 0.5f ? 1.0f : 0.0f;
  Tape tape;
  ForwardContext ctx{tape};
  ForwardTrace trace;
  DualLogits logits = net.forward(ctx, x, true, InferenceMode::kFsnn, &trace);
  Gradients grads = tape.backward(sum_all(tape, logits.spike));
  int checked = 0;
  for (int l = 1; l < c.depth; ++l) {
    const BlockTrace& prev = trace.blocks[static_cast<size_t>(l - 1)];
    const Tensor g_prev = grads.of(prev.s);
    const Tensor g_next = grads.of(trace.blocks[static_cast<size_t>(l)].s);
    const Tensor& s = tape.value(prev.s);
    const Tensor& in = tape.value(prev.input);
    for (int64_t i = 0; i < g_prev.numel(); ++i) {
      if (g_next[i] == 0.0f) continue;
      const float factor = surrogate_grad(s[i] + in[i] - 1.0f, nc.surrogate);
      EXPECT_NEAR(g_prev[i] / g_next[i], factor, 1e-4 * factor) << l << ' ' << i;
      ++checked;
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(GradProbeTest, AccumulationPathIsDepthIndependent) {
  ProbeConfig c;
  c.depth = 16;
  c.kind = BlockKind::kSnResidual;
  c.input_rate = 0.0f;
  ProbeResult with = grad_probe(c);
  ASSERT_EQ(with.accumulation_amplitude.size(), 16u);
  for (double v : with.accumulation_amplitude) {
    EXPECT_NEAR(v, with.accumulation_amplitude.back(), 1e-6 * with.accumulation_amplitude.back());
  }
  c.with_aap = false;
  ProbeResult without = grad_probe(c);
  EXPECT_GE(with.amplitude.front() / without.amplitude.front(), 10.0);
}

TEST(GradProbeTest, LogicalIdentityDoesNotDecay) {
  for (GFunction g : {GFunction::kIand, GFunction::kOr, GFunction::kXor}) {
    ProbeConfig c;
    c.depth = 6;
    c.g = g;
    c.with_aap = false;
    c.seed = 3;
    ProbeResult r = grad_probe(c);
    for (double v : r.amplitude) EXPECT_NEAR(v, r.amplitude.back(), 1e-6 * r.amplitude.back());
  }
}

TEST(GradProbeTest, RegimeAlpha) {
  EXPECT_FLOAT_EQ(regime_alpha(Regime::kVanish), 2.0f);
  EXPECT_FLOAT_EQ(regime_alpha(Regime::kExplode), 3.0f);
  EXPECT_EQ(parse_regime("explode"), Regime::kExplode);
  EXPECT_THROW(parse_regime("flat"), std::invalid_argument);
  ProbeConfig c;
  c.depth = 0;
  EXPECT_THROW(grad_probe(c), std::invalid_argument);
}

TEST(GradProbeTest, CsvRows) {
  ProbeConfig c;
  c.depth = 3;
  c.seed = 5;
  c.regime = Regime::kExplode;
  std::ostringstream out;
  write_probe_csv_header(out);
  write_probe_csv(out, c, grad_probe(c));
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "block_index,grad_amplitude,variant,regime,with_aap,seed");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(line.rfind(std::to_string(rows) + ",", 0), 0u) << line;
    EXPECT_NE(line.find(",LOGICAL_IAND,EXPLODE,1,5"), std::string::npos) << line;
  }
  EXPECT_EQ(rows, 3);
}

TEST(IdentityGradientTest, LogicalBlocksPassGradientOne) {
  for (GFunction g : {GFunction::kIand, GFunction::kOr, GFunction::kXor}) {
    ConstancyReport r = identity_gradient_check(4, g, 1);
    EXPECT_LE(r.spike_max_dev, 1e-6) << to_string(g);
    EXPECT_LE(r.accumulation_max_dev, 1e-6) << to_string(g);
    EXPECT_LE(r.accumulation_fd_max_dev, 1e-4) << to_string(g);
  }
  // AND blocks output zero at identity and pass no gradient to x.
  EXPECT_NEAR(identity_gradient_check(2, GFunction::kAnd, 1).spike_max_dev, 1.0, 1e-9);
}

TEST(CompareVanishingTest, RowsPerConfiguration) {
  VanishingOptions o;
  o.depths = {2, 4};
  std::vector<VanishingRow> rows = compare_vanishing(o);
  ASSERT_EQ(rows.size(), 2u * 2u * 2u);
  for (const VanishingRow& r : rows) {
    EXPECT_GT(r.first_block_norm, 0.0) << r.variant << r.depth << r.with_aap;
    EXPECT_LT(r.accuracy, 0.0);
  }
  // rows: depth-major, then variant, then without/with the accumulation path
  EXPECT_EQ(rows[0].variant, "SN_RESIDUAL");
  EXPECT_FALSE(rows[0].with_aap);
  std::ostringstream out;
  write_vanishing_csv(out, rows);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
            "depth,variant,regime,with_aap,first_block_grad_norm,accuracy");
}

}  // namespace
}  // namespace spikestream
