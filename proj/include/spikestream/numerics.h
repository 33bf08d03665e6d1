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

#ifndef SPIKESTREAM_NUMERICS_H_
#define SPIKESTREAM_NUMERICS_H_

#include <optional>
#include <span>
#include <vector>

#include "spikestream/tape.h"
#include "spikestream/tensor.h"

namespace spikestream {

struct ConvGeometry {
  int stride = 1;
  int padding = 0;
};

// Plain convolution parameters, used outside of a tape (fusion, export,
// reference checks).
struct ConvParams {
  Tensor weight;  // (out_ch, in_ch, kh, kw)
  std::optional<Tensor> bias;  // (out_ch)
  ConvGeometry geometry;
};

// Inference-form batch norm: y = gamma * (x - mean) / std + beta, with the
// epsilon already folded into `std`.
struct BnParams {
  Tensor gamma;
  Tensor beta;
  Tensor mean;
  Tensor std;
};

inline constexpr float kBnEpsilon = 1e-5f;
inline constexpr float kBnMomentum = 0.1f;

// Running statistics updated by training-mode batch norm.
struct BnRunningStats {
  Tensor mean;
  Tensor var;  // unbiased
};

BnParams make_bn_params(const Tensor& gamma, const Tensor& beta, const BnRunningStats& stats,
                        float eps = kBnEpsilon);

// Output spatial size; throws ShapeError when the window does not tile the
// padded input exactly.
int64_t conv_out_dim(int64_t in, int64_t kernel, const ConvGeometry& g);

// --- Tensor-level kernels ---------------------------------------------------

// x: (..., C, H, W) with all leading dims treated as batch.
Tensor conv2d_forward(const Tensor& x, const ConvParams& p);
Tensor batchnorm_inference(const Tensor& x, const BnParams& p);
// Returns params such that conv2d_forward(x, fused) equals
// batchnorm_inference(conv2d_forward(x, conv), bn) for every x.
ConvParams fuse_conv_bn(const ConvParams& conv, const BnParams& bn);

// --- Taped ops --------------------------------------------------------------

Var conv2d(Tape& tape, Var x, Var weight, std::optional<Var> bias, ConvGeometry g);
Var conv2d(Tape& tape, Var x, const ConvParams& p);

// Training mode normalises by statistics over every non-channel dim (for
// sequences that is batch x time jointly) and updates `stats` with an
// exponential moving average.
Var batchnorm_train(Tape& tape, Var x, Var gamma, Var beta, BnRunningStats& stats,
                    float momentum = kBnMomentum, float eps = kBnEpsilon);
Var batchnorm_infer(Tape& tape, Var x, Var gamma, Var beta, const Tensor& mean,
                    const Tensor& std);

// x: (N, in), weight: (out, in), bias: (out) -> (N, out).
Var linear(Tape& tape, Var x, Var weight, Var bias);

// Non-overlapping mean pooling over the last two dims.
Var avg_pool(Tape& tape, Var x, int window);
// (..., H, W) -> (...)
Var global_avg_pool(Tape& tape, Var x);

Var add(Tape& tape, Var a, Var b);
Var sub(Tape& tape, Var a, Var b);
Var mul(Tape& tape, Var a, Var b);
Var scale(Tape& tape, Var a, float s);
Var reshape(Tape& tape, Var a, Shape shape);
// (T, ...) -> (...)
Var sum_time(Tape& tape, Var a);
Var select_time(Tape& tape, Var a, int64_t t);
Var stack_time(Tape& tape, std::span<const Var> steps);
Var sum_all(Tape& tape, Var a);
// sum(a * coeffs) as a scalar; `coeffs` is a constant.
Var dot_const(Tape& tape, Var a, const Tensor& coeffs);
// Mean softmax cross-entropy over the batch; logits are (N, classes).
Var softmax_cross_entropy(Tape& tape, Var logits, std::span<const int> labels);

}  // namespace spikestream

#endif  // SPIKESTREAM_NUMERICS_H_
