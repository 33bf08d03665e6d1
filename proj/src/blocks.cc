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

#include "spikestream/blocks.h"

#include <cctype>
#include <stdexcept>
#include <string>

namespace spikestream {

std::string_view to_string(GFunction g) {
  switch (g) {
    case GFunction::kAnd: return "AND";
    case GFunction::kIand: return "IAND";
    case GFunction::kOr: return "OR";
    case GFunction::kXor: return "XOR";
  }
  return "?";
}

std::string_view to_string(BlockKind k) {
  switch (k) {
    case BlockKind::kSnResidual: return "SN_RESIDUAL";
    case BlockKind::kLogical: return "LOGICAL";
    case BlockKind::kAddReference: return "ADD_REFERENCE";
  }
  return "?";
}

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

GFunction parse_g_function(std::string_view s) {
  const std::string u = upper(s);
  if (u == "AND") return GFunction::kAnd;
  if (u == "IAND") return GFunction::kIand;
  if (u == "OR") return GFunction::kOr;
  if (u == "XOR") return GFunction::kXor;
  throw std::invalid_argument("unknown g function '" + std::string(s) + "'");
}

BlockKind parse_block_kind(std::string_view s) {
  const std::string u = upper(s);
  if (u == "SN_RESIDUAL" || u == "SN") return BlockKind::kSnResidual;
  if (u == "LOGICAL") return BlockKind::kLogical;
  if (u == "ADD_REFERENCE" || u == "ADD") return BlockKind::kAddReference;
  throw std::invalid_argument("unknown block kind '" + std::string(s) + "'");
}

float g_arithmetic(GFunction g, float s, float x) {
  switch (g) {
    case GFunction::kAnd: return s * x;
    case GFunction::kIand: return (1.0f - s) * x;
    case GFunction::kOr: return s + x - s * x;
    case GFunction::kXor: return s * (1.0f - x) + x * (1.0f - s);
  }
  return 0.0f;
}

std::pair<float, float> g_partials(GFunction g, float s, float x) {
  switch (g) {
    case GFunction::kAnd: return {x, s};
    case GFunction::kIand: return {-x, 1.0f - s};
    case GFunction::kOr: return {1.0f - x, 1.0f - s};
    case GFunction::kXor: return {1.0f - 2.0f * x, 1.0f - 2.0f * s};
  }
  return {0.0f, 0.0f};
}

bool g_identity_at_zero(GFunction g) { return g != GFunction::kAnd; }

Var g_apply(Tape& tape, GFunction g, Var s, Var x) {
  const Tensor& sv = tape.value(s);
  const Tensor& xv = tape.value(x);
  require_same_shape(sv, xv, "g_apply");
  if (!sv.is_binary() || !xv.is_binary()) {
    throw std::invalid_argument(std::string("g_apply(") + std::string(to_string(g)) +
                                "): inputs must be binary spikes");
  }
  Tensor out(sv.shape());
  for (int64_t i = 0; i < out.numel(); ++i) {
    const bool a = sv[i] != 0.0f, b = xv[i] != 0.0f;
    bool r = false;
    switch (g) {
      case GFunction::kAnd: r = a && b; break;
      case GFunction::kIand: r = !a && b; break;
      case GFunction::kOr: r = a || b; break;
      case GFunction::kXor: r = a != b; break;
    }
    out[i] = r ? 1.0f : 0.0f;
  }
  return tape.record(std::move(out), {s, x}, [&tape, g, s, x](const Tensor& gout, GradSink& sink) {
    const Tensor& sv = tape.value(s);
    const Tensor& xv = tape.value(x);
    Tensor* gs = sink.wants(0) ? &sink.grad(0) : nullptr;
    Tensor* gx = sink.wants(1) ? &sink.grad(1) : nullptr;
    for (int64_t i = 0; i < gout.numel(); ++i) {
      const auto [ds, dx] = g_partials(g, sv[i], xv[i]);
      if (gs) (*gs)[i] += gout[i] * ds;
      if (gx) (*gx)[i] += gout[i] * dx;
    }
  });
}

Var aap_update(Tape& tape, Var a_prev, Var s) { return add(tape, s, a_prev); }

void BlockConfig::validate() const {
  neuron.validate();
  surrogate.validate();
  if (in_channels < 1 || out_channels < 1) throw std::invalid_argument("block: channels must be >= 1");
  if (stride < 1) throw std::invalid_argument("block: stride must be >= 1");
  if (kind == BlockKind::kSnResidual && !residual_neuron.passes_binary_identity()) {
    throw std::invalid_argument(
        "block: residual-connection neurons must be IF with 0 < V_th <= 1 and V_reset = 0");
  }
  if (kind != BlockKind::kAddReference && needs_downsample() && !downsample_spike_sn) {
    if (kind == BlockKind::kLogical) {
      throw std::invalid_argument(
          "block: logical residuals need a spiking downsample shortcut (downsample_spike_sn)");
    }
  }
}

ResidualBlock::ResidualBlock(std::string name, BlockConfig cfg, Rng& rng)
    : name_(std::move(name)), cfg_(cfg) {
  cfg_.validate();
  conv1 = ConvBn(name_ + ".conv1", cfg_.in_channels, cfg_.out_channels, 3,
                 ConvGeometry{cfg_.stride, 1}, Pathway::kSpike, rng);
  conv2 = ConvBn(name_ + ".conv2", cfg_.out_channels, cfg_.out_channels, 3, ConvGeometry{1, 1},
                 Pathway::kSpike, rng);
  if (cfg_.needs_downsample()) {
    down_spike = ConvBn(name_ + ".down_spike", cfg_.in_channels, cfg_.out_channels, 1,
                        ConvGeometry{cfg_.stride, 0}, Pathway::kSpike, rng);
    down_accum = ConvBn(name_ + ".down_accum", cfg_.in_channels, cfg_.out_channels, 1,
                        ConvGeometry{cfg_.stride, 0}, Pathway::kAccumulation, rng);
  }
}

void ResidualBlock::identity_init() {
  conv2.gamma.value.fill(0.0f);
  conv2.beta.value.fill(0.0f);
}

void ResidualBlock::fuse() {
  for (ConvBn* c : conv_layers()) c->fuse();
}

void ResidualBlock::collect(std::vector<Parameter*>& params) {
  for (ConvBn* c : conv_layers()) c->collect(params);
}

std::vector<ConvBn*> ResidualBlock::conv_layers() {
  std::vector<ConvBn*> out{&conv1, &conv2};
  if (down_spike) out.push_back(&*down_spike);
  if (down_accum) out.push_back(&*down_accum);
  return out;
}

Activation ResidualBlock::body(ForwardContext& ctx, Activation o_in) {
  Activation h = conv1.forward(ctx, o_in);
  Activation mid = spike(ctx, h.value, cfg_.neuron, cfg_.surrogate);
  Activation f = conv2.forward(ctx, mid);
  return spike(ctx, f.value, cfg_.neuron, cfg_.surrogate);
}

DualStreamState ResidualBlock::forward(ForwardContext& ctx, const DualStreamState& in,
                                       BlockTrace* trace) {
  DualStreamState out;
  switch (cfg_.kind) {
    case BlockKind::kSnResidual: out = sn_residual_forward(ctx, *this, in, trace); break;
    case BlockKind::kLogical: out = logical_residual_forward(ctx, *this, in, trace); break;
    case BlockKind::kAddReference: out = add_residual_forward(ctx, *this, in, trace); break;
  }
  if (ctx.check_spikes && out.o.binary) check_binary(ctx.tape.value(out.o.value), name_ + " output");
  return out;
}

DualStreamState dual_downsample(ForwardContext& ctx, ResidualBlock& block,
                                const DualStreamState& in) {
  if (!block.down_spike) return in;
  const BlockConfig& cfg = block.config();
  DualStreamState out;
  Activation o = block.down_spike->forward(ctx, in.o);
  if (cfg.downsample_spike_sn) o = spike(ctx, o.value, cfg.neuron, cfg.surrogate);
  out.o = o;
  if (in.a) out.a = block.down_accum->forward(ctx, Activation{*in.a, false}).value;
  return out;
}

namespace {

void require_binary_input(ForwardContext& ctx, const ResidualBlock& block, const Activation& o) {
  if (!o.binary) {
    throw std::invalid_argument(block.name() + ": " + std::string(to_string(block.config().kind)) +
                                " block needs a spike (binary) input");
  }
  if (ctx.check_spikes) check_binary(ctx.tape.value(o.value), block.name() + " input");
}

void fill_trace(BlockTrace* trace, const DualStreamState& in, Var s, const DualStreamState& out) {
  if (!trace) return;
  trace->input = in.o.value;
  trace->s = s;
  trace->o = out.o.value;
  trace->a = out.a;
}

}  // namespace

DualStreamState sn_residual_forward(ForwardContext& ctx, ResidualBlock& block,
                                    const DualStreamState& in, BlockTrace* trace) {
  require_binary_input(ctx, block, in.o);
  const BlockConfig& cfg = block.config();
  Activation s = block.body(ctx, in.o);
  DualStreamState shortcut = dual_downsample(ctx, block, in);
  DualStreamState out;
  Var pre = add(ctx.tape, s.value, shortcut.o.value);
  out.o = spike(ctx, pre, cfg.residual_neuron, cfg.surrogate);
  if (shortcut.a) out.a = aap_update(ctx.tape, *shortcut.a, s.value);
  fill_trace(trace, in, s.value, out);
  return out;
}

DualStreamState logical_residual_forward(ForwardContext& ctx, ResidualBlock& block,
                                         const DualStreamState& in, BlockTrace* trace) {
  require_binary_input(ctx, block, in.o);
  const BlockConfig& cfg = block.config();
  Activation s = block.body(ctx, in.o);
  DualStreamState shortcut = dual_downsample(ctx, block, in);
  DualStreamState out;
  out.o = Activation{g_apply(ctx.tape, cfg.g, s.value, shortcut.o.value), true};
  if (shortcut.a) out.a = aap_update(ctx.tape, *shortcut.a, s.value);
  fill_trace(trace, in, s.value, out);
  return out;
}

DualStreamState add_residual_forward(ForwardContext& ctx, ResidualBlock& block,
                                     const DualStreamState& in, BlockTrace* trace) {
  Activation s = block.body(ctx, in.o);
  DualStreamState shortcut = dual_downsample(ctx, block, in);
  DualStreamState out;
  out.o = Activation{add(ctx.tape, s.value, shortcut.o.value), false};
  if (shortcut.a) out.a = aap_update(ctx.tape, *shortcut.a, s.value);
  fill_trace(trace, in, s.value, out);
  return out;
}

}  // namespace spikestream
