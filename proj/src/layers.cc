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

#include "spikestream/layers.h"

#include <cmath>
#include <stdexcept>

namespace spikestream {

ConvBn::ConvBn(std::string n, int64_t in_ch, int64_t out_ch, int kernel, ConvGeometry g,
               Pathway p, Rng& rng)
    : name(std::move(n)), pathway(p), geometry(g) {
  weight = Parameter{name + ".weight", Tensor({out_ch, in_ch, kernel, kernel})};
  // Kaiming-normal, fan-in.
  const float stddev = std::sqrt(2.0f / static_cast<float>(in_ch * kernel * kernel));
  for (int64_t i = 0; i < weight.value.numel(); ++i) weight.value[i] = stddev * rng.normal();
  gamma = Parameter{name + ".bn.gamma", Tensor::full({out_ch}, 1.0f)};
  beta = Parameter{name + ".bn.beta", Tensor::zeros({out_ch})};
  stats = BnRunningStats{Tensor::zeros({out_ch}), Tensor::full({out_ch}, 1.0f)};
}

ConvParams ConvBn::conv_params() const {
  ConvParams p{weight.value, std::nullopt, geometry};
  if (bias) p.bias = bias->value;
  return p;
}

BnParams ConvBn::bn_params() const {
  if (!has_bn) throw std::logic_error(name + ": no batch norm (already fused)");
  return make_bn_params(gamma.value, beta.value, stats);
}

void ConvBn::fuse() {
  if (!has_bn) throw std::logic_error(name + ": batch norm already fused");
  ConvParams fused = fuse_conv_bn(conv_params(), bn_params());
  weight.value = std::move(fused.weight);
  bias = Parameter{name + ".bias", std::move(*fused.bias)};
  has_bn = false;
}

Activation ConvBn::forward(ForwardContext& ctx, Activation in) {
  Tape& tape = ctx.tape;
  if (ctx.observer) {
    ctx.observer->on_synaptic(SynapticCall{name, pathway, tape.value(in.value), in.binary,
                                           weight.value.shape(), geometry, false});
  }
  std::optional<Var> b;
  if (bias) b = tape.param(*bias);
  Var y = conv2d(tape, in.value, tape.param(weight), b, geometry);
  if (has_bn) {
    if (ctx.training) {
      y = batchnorm_train(tape, y, tape.param(gamma), tape.param(beta), stats);
    } else {
      const BnParams p = bn_params();
      y = batchnorm_infer(tape, y, tape.param(gamma), tape.param(beta), p.mean, p.std);
    }
  }
  return Activation{y, false};
}

void ConvBn::collect(std::vector<Parameter*>& params) {
  params.push_back(&weight);
  if (bias) params.push_back(&*bias);
  if (has_bn) {
    params.push_back(&gamma);
    params.push_back(&beta);
  }
}

LinearLayer::LinearLayer(std::string n, int64_t in, int64_t out, Pathway p, Rng& rng)
    : name(std::move(n)), pathway(p) {
  weight = Parameter{name + ".weight", Tensor({out, in})};
  const float bound = 1.0f / std::sqrt(static_cast<float>(in));
  for (int64_t i = 0; i < weight.value.numel(); ++i) {
    weight.value[i] = (2.0f * rng.uniform() - 1.0f) * bound;
  }
  bias = Parameter{name + ".bias", Tensor::zeros({out})};
}

Var LinearLayer::forward(ForwardContext& ctx, Activation in) {
  Tape& tape = ctx.tape;
  if (ctx.observer) {
    static const ConvGeometry kNone{};
    ctx.observer->on_synaptic(SynapticCall{name, pathway, tape.value(in.value), in.binary,
                                           weight.value.shape(), kNone, true});
  }
  return linear(tape, in.value, tape.param(weight), tape.param(bias));
}

void LinearLayer::collect(std::vector<Parameter*>& params) {
  params.push_back(&weight);
  params.push_back(&bias);
}

Activation spike(ForwardContext& ctx, Var x_seq, const NeuronConfig& cfg,
                 const SurrogateConfig& sg) {
  return Activation{sn_sequence(ctx.tape, x_seq, cfg, sg), true};
}

void check_binary(const Tensor& t, const std::string& where) {
  if (!t.is_binary()) throw std::logic_error("non-binary value on the spike path at " + where);
}

}  // namespace spikestream
