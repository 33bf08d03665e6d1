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

#ifndef SPIKESTREAM_LAYERS_H_
#define SPIKESTREAM_LAYERS_H_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spikestream/neuron.h"
#include "spikestream/numerics.h"
#include "spikestream/tape.h"

namespace spikestream {

// Which pathway a synaptic layer belongs to. Accumulation-path layers are
// exactly the ones an FSNN forward skips.
enum class Pathway { kSpike, kAccumulation };

// A value plus the static knowledge of whether every element is in {0, 1}.
// The flag follows the graph structure, never the sampled values.
struct Activation {
  Var value;
  bool binary = false;
};

struct SynapticCall {
  const std::string& layer;
  Pathway pathway;
  const Tensor& input;
  bool binary_input;
  const Shape& weight_shape;
  ConvGeometry geometry;
  bool is_linear;
};

// Sees every convolution/linear execution of an instrumented forward.
class SynapticObserver {
 public:
  virtual ~SynapticObserver() = default;
  virtual void on_synaptic(const SynapticCall& call) = 0;
};

struct ForwardContext {
  Tape& tape;
  bool training = false;
  SynapticObserver* observer = nullptr;
  // Throw if a value flagged binary is not; costs one pass over each o tensor.
  bool check_spikes = true;
};

struct ConvBn {
  std::string name;
  Pathway pathway = Pathway::kSpike;
  ConvGeometry geometry;
  Parameter weight;
  std::optional<Parameter> bias;  // present only once BN has been fused in
  bool has_bn = true;
  Parameter gamma;
  Parameter beta;
  BnRunningStats stats;

  ConvBn() = default;
  ConvBn(std::string name, int64_t in_ch, int64_t out_ch, int kernel, ConvGeometry g,
         Pathway pathway, Rng& rng);

  ConvParams conv_params() const;
  BnParams bn_params() const;
  // Folds BN into the convolution. Throws std::logic_error if already fused.
  void fuse();
  // Output is never binary.
  Activation forward(ForwardContext& ctx, Activation in);
  void collect(std::vector<Parameter*>& params);
};

struct LinearLayer {
  std::string name;
  Pathway pathway = Pathway::kSpike;
  Parameter weight;
  Parameter bias;

  LinearLayer() = default;
  LinearLayer(std::string name, int64_t in, int64_t out, Pathway pathway, Rng& rng);
  Var forward(ForwardContext& ctx, Activation in);
  void collect(std::vector<Parameter*>& params);
};

// Multi-step neuron layer; output is binary.
Activation spike(ForwardContext& ctx, Var x_seq, const NeuronConfig& cfg,
                 const SurrogateConfig& sg);

void check_binary(const Tensor& t, const std::string& where);

}  // namespace spikestream

#endif  // SPIKESTREAM_LAYERS_H_
