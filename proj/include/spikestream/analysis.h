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

#ifndef SPIKESTREAM_ANALYSIS_H_
#define SPIKESTREAM_ANALYSIS_H_

#include <ostream>
#include <string>
#include <vector>

#include "spikestream/network.h"

namespace spikestream {

// VANISH uses alpha = 2 (sigma'(-1) ~ 0.092 < 1), EXPLODE alpha = 3
// (sigma'(0) = 1.5 > 1); both with V_th = 1.
enum class Regime { kVanish, kExplode };
std::string_view to_string(Regime r);
Regime parse_regime(std::string_view s);
float regime_alpha(Regime r);

struct ProbeConfig {
  int depth = 8;
  BlockKind kind = BlockKind::kLogical;
  GFunction g = GFunction::kIand;
  Regime regime = Regime::kVanish;
  bool with_aap = true;
  uint64_t seed = 0;
  int channels = 4;
  int spatial = 4;
  int time_steps = 1;
  int batch = 2;
  // Input spikes are Bernoulli(input_rate); 0 gives the silent state.
  float input_rate = 0.5f;
};

// Identity-initialised probe network: constant width, no downsampling.
NetworkConfig probe_network_config(const ProbeConfig& cfg);

struct ProbeResult {
  // ||dL/ds_l|| for l = 1..depth, L = sum of output logits.
  std::vector<double> amplitude;
  // ||dL/da_l|| (empty without the accumulation pathway).
  std::vector<double> accumulation_amplitude;
  // ||dL/do_0|| at the stem output.
  double stem_amplitude = 0.0;
};

ProbeResult grad_probe(const ProbeConfig& cfg);

void write_probe_csv_header(std::ostream& out);
void write_probe_csv(std::ostream& out, const ProbeConfig& cfg, const ProbeResult& r);
std::string variant_name(BlockKind kind, GFunction g);

// Largest deviation from 1 of d(sum o_L)/d(o_0) and d(sum a_L)/d(a_0) per
// element in a freshly built network of `depth` logical blocks. The
// accumulation figure is also checked by central differences on a_0.
struct ConstancyReport {
  double spike_max_dev = 0.0;
  double accumulation_max_dev = 0.0;
  double accumulation_fd_max_dev = 0.0;
};
ConstancyReport identity_gradient_check(int depth, GFunction g, uint64_t seed, int time_steps = 2);

struct VanishingRow {
  int depth = 0;
  std::string variant;
  Regime regime = Regime::kVanish;
  bool with_aap = false;
  double first_block_norm = 0.0;
  double accuracy = -1.0;  // -1 when not trained
};

struct VanishingOptions {
  std::vector<int> depths{1, 2, 4, 8, 16};
  std::vector<Regime> regimes{Regime::kVanish};
  std::vector<std::pair<BlockKind, GFunction>> variants{
      {BlockKind::kSnResidual, GFunction::kIand}, {BlockKind::kLogical, GFunction::kIand}};
  uint64_t seed = 0;
  float input_rate = 0.5f;
  // When > 0, each configuration is also trained on the synthetic task for
  // this many epochs and its spike-head training accuracy reported.
  int train_epochs = 0;
  int train_samples = 200;
};

std::vector<VanishingRow> compare_vanishing(const VanishingOptions& opts);
void write_vanishing_csv(std::ostream& out, const std::vector<VanishingRow>& rows);

}  // namespace spikestream

#endif  // SPIKESTREAM_ANALYSIS_H_
