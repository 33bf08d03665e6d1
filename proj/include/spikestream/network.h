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

#ifndef SPIKESTREAM_NETWORK_H_
#define SPIKESTREAM_NETWORK_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "spikestream/blocks.h"

namespace spikestream {

// How DSNN-mode predictions combine the two heads.
enum class Readout { kSum, kSpikeOnly, kAccumulationOnly };

// FSNN skips every accumulation-path computation; DSNN runs both pathways.
enum class InferenceMode { kFsnn, kDsnn };

std::string_view to_string(Readout r);
std::string_view to_string(InferenceMode m);
Readout parse_readout(std::string_view s);
InferenceMode parse_mode(std::string_view s);

struct StageConfig {
  int blocks = 1;
  int64_t channels = 8;
  bool downsample = false;  // stride 2 in the first block of the stage
};

struct NetworkConfig {
  int64_t in_channels = 2;
  int64_t height = 8;
  int64_t width = 8;
  int64_t stem_channels = 8;
  std::vector<StageConfig> stages{StageConfig{}};
  BlockKind block_kind = BlockKind::kLogical;
  GFunction g = GFunction::kIand;
  NeuronConfig neuron;
  NeuronConfig residual_neuron;
  SurrogateConfig surrogate;
  int time_steps = 4;
  int num_classes = 2;
  Readout readout = Readout::kSum;
  bool downsample_spike_sn = true;

  // Throws std::invalid_argument naming the first inconsistency.
  void validate() const;
  int total_blocks() const;

  nlohmann::json to_json() const;
  static NetworkConfig from_json(const nlohmann::json& j);
};

class LogitsAbsentError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct DualLogits {
  InferenceMode mode = InferenceMode::kDsnn;
  Var spike;
  std::optional<Var> accumulation;

  // Throws LogitsAbsentError in FSNN mode.
  Var logits_a() const;
};

// Everything a forward exposes beyond the logits, for probes and tests.
struct ForwardTrace {
  Var stem;
  std::vector<BlockTrace> blocks;
};

class Network {
 public:
  // Deterministic in `seed`. Applies identity initialisation to every block.
  static Network build(const NetworkConfig& config, uint64_t seed);

  Network(Network&&) = default;
  Network& operator=(Network&&) = default;

  const NetworkConfig& config() const { return config_; }
  bool fused() const { return fused_; }

  // x: (T, N, C, H, W). `input_binary` marks spike-encoded input.
  DualLogits forward(ForwardContext& ctx, const Tensor& x, bool input_binary, InferenceMode mode,
                     ForwardTrace* trace = nullptr);
  DualLogits forward(ForwardContext& ctx, Var x, bool input_binary, InferenceMode mode,
                     ForwardTrace* trace = nullptr);

  // Prediction scores for the configured readout.
  Tensor scores(const Tape& tape, const DualLogits& logits) const;

  // Trainable parameters in a stable order.
  std::vector<Parameter*> parameters();
  std::vector<ConvBn*> conv_layers();
  std::vector<LinearLayer*> linear_layers();

  // Folds every BN into its convolution. Throws std::logic_error when
  // already fused.
  void fuse();

  void save(const std::filesystem::path& path) const;
  static Network load(const std::filesystem::path& path);
  // Writes the config header with no tensors; load_architecture() reads it
  // (or a full checkpoint) and builds an untrained network of that shape.
  void save_architecture(const std::filesystem::path& path) const;
  static Network load_architecture(const std::filesystem::path& path);

  ConvBn stem;
  std::vector<ResidualBlock> blocks;
  LinearLayer head_spike;
  LinearLayer head_accum;

 private:
  Network() = default;
  NetworkConfig config_;
  bool fused_ = false;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spikestream

#endif  // SPIKESTREAM_NETWORK_H_
