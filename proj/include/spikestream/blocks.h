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

#ifndef SPIKESTREAM_BLOCKS_H_
#define SPIKESTREAM_BLOCKS_H_

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spikestream/layers.h"

namespace spikestream {

// Element-wise logical residual connectives. Arithmetic forms, with s the
// block output spike and x the residual input:
//   AND  s * x
//   IAND (1 - s) * x
//   OR   s + x - s * x
//   XOR  s * (1 - x) + x * (1 - s)
enum class GFunction { kAnd, kIand, kOr, kXor };

enum class BlockKind {
  kSnResidual,    // o = SN_IF(s + o_prev)
  kLogical,       // o = g(s, o_prev)
  kAddReference,  // o = s + o_prev; not a spike signal
};

std::string_view to_string(GFunction g);
std::string_view to_string(BlockKind k);
GFunction parse_g_function(std::string_view s);
BlockKind parse_block_kind(std::string_view s);

float g_arithmetic(GFunction g, float s, float x);
// (d g / d s, d g / d x) of the arithmetic form.
std::pair<float, float> g_partials(GFunction g, float s, float x);
// True when g(0, x) == x, i.e. a silent block passes its input through.
bool g_identity_at_zero(GFunction g);

// Forward evaluates the Boolean table; throws std::invalid_argument if either
// input is not binary.
Var g_apply(Tape& tape, GFunction g, Var s, Var x);
// a_out = s + a_prev.
Var aap_update(Tape& tape, Var a_prev, Var s);

// o is the spike pathway; a, when present, the auxiliary accumulation. An
// absent a means the accumulation pathway is not being computed.
struct DualStreamState {
  Activation o;
  std::optional<Var> a;
};

struct BlockConfig {
  BlockKind kind = BlockKind::kLogical;
  GFunction g = GFunction::kIand;
  NeuronConfig neuron;           // body neurons
  NeuronConfig residual_neuron;  // SN_RESIDUAL connection neuron, IF
  SurrogateConfig surrogate;
  int64_t in_channels = 0;
  int64_t out_channels = 0;
  int stride = 1;
  // Include an SN after the spike-branch Conv-BN of a downsample shortcut.
  bool downsample_spike_sn = true;

  bool needs_downsample() const { return stride != 1 || in_channels != out_channels; }
  void validate() const;
};

// Values seen inside one block during a forward, for probes.
struct BlockTrace {
  Var input;
  Var s;
  Var o;
  std::optional<Var> a;
};

class ResidualBlock {
 public:
  ResidualBlock(std::string name, BlockConfig cfg, Rng& rng);

  const std::string& name() const { return name_; }
  const BlockConfig& config() const { return cfg_; }

  // Zeroes gamma and beta of the last BN in the body so s == 0.
  void identity_init();
  void fuse();

  DualStreamState forward(ForwardContext& ctx, const DualStreamState& in,
                          BlockTrace* trace = nullptr);

  void collect(std::vector<Parameter*>& params);
  std::vector<ConvBn*> conv_layers();

  // s = SN(f(o_in)), f = Conv3x3-BN-SN-Conv3x3-BN.
  Activation body(ForwardContext& ctx, Activation o_in);

  ConvBn conv1;
  ConvBn conv2;
  std::optional<ConvBn> down_spike;
  std::optional<ConvBn> down_accum;

 private:
  std::string name_;
  BlockConfig cfg_;
};

// Shortcut transform for blocks that change shape: the spike branch runs
// Conv-BN(-SN), the accumulation branch its own Conv-BN. Pass-through when the
// block has no downsample.
DualStreamState dual_downsample(ForwardContext& ctx, ResidualBlock& block,
                                const DualStreamState& in);

DualStreamState sn_residual_forward(ForwardContext& ctx, ResidualBlock& block,
                                    const DualStreamState& in, BlockTrace* trace = nullptr);
DualStreamState logical_residual_forward(ForwardContext& ctx, ResidualBlock& block,
                                         const DualStreamState& in, BlockTrace* trace = nullptr);
DualStreamState add_residual_forward(ForwardContext& ctx, ResidualBlock& block,
                                     const DualStreamState& in, BlockTrace* trace = nullptr);

}  // namespace spikestream

#endif  // SPIKESTREAM_BLOCKS_H_
