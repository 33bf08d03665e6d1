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

#ifndef SPIKESTREAM_NEURON_H_
#define SPIKESTREAM_NEURON_H_

#include "spikestream/tape.h"
#include "spikestream/tensor.h"

namespace spikestream {

enum class NeuronKind { kIF, kLIF };

struct NeuronConfig {
  NeuronKind kind = NeuronKind::kIF;
  float v_threshold = 1.0f;
  float v_reset = 0.0f;
  float tau = 2.0f;  // LIF only
  // When set, the reset is treated as a constant in backward. Off by default:
  // the hard reset is differentiated as written.
  bool detach_reset = false;

  // Throws std::invalid_argument on V_th <= 0, or tau <= 1 for LIF.
  void validate() const;
  // 0 < V_th <= 1 with IF dynamics: a binary input is reproduced exactly.
  bool passes_binary_identity() const;
};

// Arctangent surrogate: sigma(x) = atan(pi/2 * alpha * x) / pi + 1/2.
struct SurrogateConfig {
  float alpha = 2.0f;
  void validate() const;
};

float surrogate(float x, const SurrogateConfig& sg);
// sigma'(x) = alpha / (2 * (1 + (pi/2 * alpha * x)^2))
float surrogate_grad(float x, const SurrogateConfig& sg);

// Membrane potential carried from step t-1 to step t.
struct NeuronState {
  Var v;
  static NeuronState initial(Tape& tape, const Shape& shape, const NeuronConfig& cfg);
};

// H_t from V_{t-1} and X_t (IF: V + X; LIF: V + (X - (V - V_reset)) / tau).
Var charge(Tape& tape, Var v_prev, Var x, const NeuronConfig& cfg);
// S_t = 1 where H_t >= V_th. Backward substitutes sigma'(H_t - V_th).
Var fire(Tape& tape, Var h, const NeuronConfig& cfg, const SurrogateConfig& sg);
// V_t = H_t (1 - S_t) + V_reset S_t.
Var reset(Tape& tape, Var h, Var s, const NeuronConfig& cfg);
// charge -> fire -> reset; returns S_t and advances state.v.
Var sn_step(Tape& tape, NeuronState& state, Var x_t, const NeuronConfig& cfg,
            const SurrogateConfig& sg);

// Multi-step neuron over a (T, ...) input starting from V = V_reset. One tape
// node; its backward is BPTT over the same per-step equations as sn_step.
Var sn_sequence(Tape& tape, Var x_seq, const NeuronConfig& cfg, const SurrogateConfig& sg);

}  // namespace spikestream

#endif  // SPIKESTREAM_NEURON_H_
