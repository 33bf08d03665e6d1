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

#include "spikestream/syops.h"

#include <algorithm>
#include <array>

namespace spikestream {

using nlohmann::json;

namespace {

// Number of output positions along one axis whose window covers input index i.
std::vector<int64_t> coverage(int64_t in, int64_t kernel, const ConvGeometry& g) {
  const int64_t out = conv_out_dim(in, kernel, g);
  std::vector<int64_t> cov(static_cast<size_t>(in), 0);
  for (int64_t o = 0; o < out; ++o) {
    const int64_t start = o * g.stride - g.padding;
    for (int64_t k = 0; k < kernel; ++k) {
      const int64_t i = start + k;
      if (i >= 0 && i < in) ++cov[static_cast<size_t>(i)];
    }
  }
  return cov;
}

struct ConvDims {
  int64_t batch, c, h, w;
};

ConvDims conv_dims(const Shape& s, const Shape& weight_shape) {
  if (s.size() < 3 || weight_shape.size() != 4 || s[s.size() - 3] != weight_shape[1]) {
    throw ShapeError("op count: input " + shape_str(s) + " does not match weight " +
                     shape_str(weight_shape));
  }
  const int64_t c = s[s.size() - 3], h = s[s.size() - 2], w = s[s.size() - 1];
  return {shape_numel(s) / (c * h * w), c, h, w};
}

}  // namespace

uint64_t spike_conv_ac_ops(const Tensor& input, const Shape& weight_shape, const ConvGeometry& g) {
  const ConvDims d = conv_dims(input.shape(), weight_shape);
  const std::vector<int64_t> cy = coverage(d.h, weight_shape[2], g);
  const std::vector<int64_t> cx = coverage(d.w, weight_shape[3], g);
  uint64_t total = 0;
  const float* p = input.ptr();
  for (int64_t bc = 0; bc < d.batch * d.c; ++bc) {
    for (int64_t y = 0; y < d.h; ++y) {
      for (int64_t x = 0; x < d.w; ++x, ++p) {
        if (*p != 0.0f) total += static_cast<uint64_t>(cy[static_cast<size_t>(y)] * cx[static_cast<size_t>(x)]);
      }
    }
  }
  return total * static_cast<uint64_t>(weight_shape[0]);
}

uint64_t spike_conv_ac_max(const Shape& input_shape, const Shape& weight_shape,
                           const ConvGeometry& g) {
  const ConvDims d = conv_dims(input_shape, weight_shape);
  const std::vector<int64_t> cy = coverage(d.h, weight_shape[2], g);
  const std::vector<int64_t> cx = coverage(d.w, weight_shape[3], g);
  int64_t sy = 0, sx = 0;
  for (int64_t v : cy) sy += v;
  for (int64_t v : cx) sx += v;
  return static_cast<uint64_t>(d.batch * d.c * sy * sx * weight_shape[0]);
}

uint64_t dense_conv_mac_ops(const Shape& input_shape, const Shape& weight_shape,
                            const ConvGeometry& g) {
  const ConvDims d = conv_dims(input_shape, weight_shape);
  const int64_t ho = conv_out_dim(d.h, weight_shape[2], g);
  const int64_t wo = conv_out_dim(d.w, weight_shape[3], g);
  return static_cast<uint64_t>(d.batch * weight_shape[0] * ho * wo * d.c * weight_shape[2] *
                               weight_shape[3]);
}

void OpCounter::on_synaptic(const SynapticCall& call) {
  ++seen_;
  auto it = std::find_if(layers_.begin(), layers_.end(),
                         [&](const LayerOps& l) { return l.layer == call.layer; });
  if (it == layers_.end()) {
    layers_.push_back(LayerOps{call.layer, call.pathway, call.binary_input, 0, 0, 0, 0});
    it = layers_.end() - 1;
  }
  LayerOps& l = *it;
  l.spike_input = call.binary_input;
  ++l.calls;
  if (call.is_linear) {
    const int64_t out = call.weight_shape[0], in = call.weight_shape[1];
    const int64_t rows = call.input.numel() / in;
    if (call.binary_input) {
      uint64_t nz = 0;
      for (float v : call.input.data()) nz += v != 0.0f;
      l.ac_ops += nz * static_cast<uint64_t>(out);
      l.ac_max += static_cast<uint64_t>(call.input.numel() * out);
    } else {
      l.mac_ops += static_cast<uint64_t>(rows * out * in);
    }
    return;
  }
  if (call.binary_input) {
    l.ac_ops += spike_conv_ac_ops(call.input, call.weight_shape, call.geometry);
    l.ac_max += spike_conv_ac_max(call.input.shape(), call.weight_shape, call.geometry);
  } else {
    l.mac_ops += dense_conv_mac_ops(call.input.shape(), call.weight_shape, call.geometry);
  }
}

OpCount OpCounter::finish(int64_t samples, int time_steps) const {
  const int64_t executed = tape_.synaptic_ops() - baseline_;
  if (executed != seen_) {
    throw UninstrumentedLayerError("op counter saw " + std::to_string(seen_) +
                                   " synaptic layer executions but the forward ran " +
                                   std::to_string(executed));
  }
  OpCount c;
  c.per_layer = layers_;
  c.samples = samples;
  c.time_steps = time_steps;
  for (const LayerOps& l : layers_) {
    c.ac_ops += l.ac_ops;
    c.mac_ops += l.mac_ops;
    c.ac_max += l.ac_max;
  }
  return c;
}

void OpCount::merge(const OpCount& other) {
  if (per_layer.empty()) {
    samples = 0;
    time_steps = other.time_steps;
  }
  for (const LayerOps& l : other.per_layer) {
    auto it = std::find_if(per_layer.begin(), per_layer.end(),
                           [&](const LayerOps& m) { return m.layer == l.layer; });
    if (it == per_layer.end()) {
      per_layer.push_back(l);
      continue;
    }
    it->ac_ops += l.ac_ops;
    it->mac_ops += l.mac_ops;
    it->ac_max += l.ac_max;
    it->calls += l.calls;
  }
  ac_ops += other.ac_ops;
  mac_ops += other.mac_ops;
  ac_max += other.ac_max;
  samples += other.samples;
}

OpCount OpCount::only(Pathway p) const {
  OpCount c;
  c.samples = samples;
  c.time_steps = time_steps;
  for (const LayerOps& l : per_layer) {
    if (l.pathway != p) continue;
    c.per_layer.push_back(l);
    c.ac_ops += l.ac_ops;
    c.mac_ops += l.mac_ops;
    c.ac_max += l.ac_max;
  }
  return c;
}

OpCount count_ops(Network& net, const Tensor& batch, bool input_binary, InferenceMode mode) {
  Tape tape(false);
  OpCounter counter(tape);
  ForwardContext ctx{tape, false, &counter};
  net.forward(ctx, batch, input_binary, mode);
  return counter.finish(batch.dim(1), static_cast<int>(batch.dim(0)));
}

double dynamic_consumption(double ac_ops, double mac_ops, const EnergyModel& m) {
  return (m.e_ac_pj * ac_ops + m.e_mac_pj * mac_ops) * 1e-9;
}

double dynamic_consumption(const OpCount& c, const EnergyModel& m) {
  return dynamic_consumption(c.ac_per_sample(), c.mac_per_sample(), m);
}

std::pair<double, double> estimated_consumption(double mac_total, double ac_max,
                                                const EnergyModel& m) {
  const double lower = m.e_mac_pj * mac_total * 1e-9;
  return {lower, lower + m.e_ac_pj * ac_max * 1e-9};
}

double energy_ratio(int time_steps, double firing_rate, const EnergyModel& m) {
  return time_steps * firing_rate * m.e_ac_pj / m.e_mac_pj;
}

double firing_rate(const Tensor& t) {
  if (t.numel() == 0) return 0.0;
  int64_t nz = 0;
  for (float v : t.data()) nz += v != 0.0f;
  return static_cast<double>(nz) / static_cast<double>(t.numel());
}

FiringRateReport firing_rates(Network& net, const Tensor& batch, bool input_binary,
                              InferenceMode mode) {
  Tape tape(false);
  ForwardContext ctx{tape};
  ForwardTrace trace;
  net.forward(ctx, batch, input_binary, mode, &trace);
  FiringRateReport r;
  r.stem = firing_rate(tape.value(trace.stem));
  for (size_t i = 0; i < trace.blocks.size(); ++i) {
    r.blocks.push_back(BlockFiringRate{net.blocks[i].name(),
                                       firing_rate(tape.value(trace.blocks[i].s)),
                                       firing_rate(tape.value(trace.blocks[i].o))});
  }
  return r;
}

json report_json(const OpCount& c, const EnergyModel& m,
                 const std::optional<FiringRateReport>& rates) {
  json layers = json::array();
  const double n = static_cast<double>(c.samples);
  for (const LayerOps& l : c.per_layer) {
    layers.push_back({{"layer", l.layer},
                      {"pathway", l.pathway == Pathway::kSpike ? "spike" : "accumulation"},
                      {"input", l.spike_input ? "spike" : "dense"},
                      {"ac_ops", static_cast<double>(l.ac_ops) / n},
                      {"mac_ops", static_cast<double>(l.mac_ops) / n},
                      {"ac_max", static_cast<double>(l.ac_max) / n}});
  }
  const auto [lo, hi] = estimated_consumption(c.mac_per_sample(), c.ac_max_per_sample(), m);
  json j{{"per_layer", layers},
         {"samples", c.samples},
         {"time_steps", c.time_steps},
         {"ac_ops", c.ac_per_sample()},
         {"mac_ops", c.mac_per_sample()},
         {"ac_max", c.ac_max_per_sample()},
         {"dc_mj", dynamic_consumption(c, m)},
         {"ec_lower_mj", lo},
         {"ec_upper_mj", hi}};
  if (rates) {
    json blocks = json::array();
    for (const BlockFiringRate& b : rates->blocks) {
      blocks.push_back({{"block", b.block}, {"s", b.body}, {"o", b.output}});
    }
    j["firing_rates"] = {{"stem", rates->stem}, {"blocks", blocks}};
  } else {
    j["firing_rates"] = nullptr;
  }
  return j;
}

std::span<const CalibrationRow> calibration_rows() {
  static constexpr std::array<CalibrationRow, 5> kRows = {{
      {"FSNN-18", 1.69, 0.12, 2.07},
      {"FSNN-34", 3.42, 0.12, 3.63},
      {"FSNN-50", 3.14, 0.12, 3.38},
      {"SEW-ResNet-18", 0.51, 2.75, 13.11},
      {"SEW-ResNet-34", 0.86, 6.46, 30.50},
  }};
  return kRows;
}

}  // namespace spikestream
