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

#include "spikestream/neuron.h"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace spikestream {

void NeuronConfig::validate() const {
  if (!(v_threshold > 0.0f)) throw std::invalid_argument("neuron: v_threshold must be > 0");
  if (kind == NeuronKind::kLIF && !(tau > 1.0f)) {
    throw std::invalid_argument("neuron: LIF tau must be > 1");
  }
}

bool NeuronConfig::passes_binary_identity() const {
  return kind == NeuronKind::kIF && v_threshold > 0.0f && v_threshold <= 1.0f && v_reset == 0.0f;
}

void SurrogateConfig::validate() const {
  if (!(alpha > 0.0f)) throw std::invalid_argument("surrogate: alpha must be > 0");
}

float surrogate(float x, const SurrogateConfig& sg) {
  const double a = sg.alpha;
  return static_cast<float>(std::atan(std::numbers::pi / 2.0 * a * x) / std::numbers::pi + 0.5);
}

float surrogate_grad(float x, const SurrogateConfig& sg) {
  const double a = sg.alpha;
  const double u = std::numbers::pi / 2.0 * a * x;
  return static_cast<float>(a / (2.0 * (1.0 + u * u)));
}

NeuronState NeuronState::initial(Tape& tape, const Shape& shape, const NeuronConfig& cfg) {
  return NeuronState{tape.leaf(Tensor::full(shape, cfg.v_reset))};
}

Var charge(Tape& tape, Var v_prev, Var x, const NeuronConfig& cfg) {
  const Tensor& vv = tape.value(v_prev);
  const Tensor& xv = tape.value(x);
  require_same_shape(vv, xv, "charge");
  Tensor h(xv.shape());
  const bool lif = cfg.kind == NeuronKind::kLIF;
  const float inv_tau = 1.0f / cfg.tau;
  for (int64_t i = 0; i < h.numel(); ++i) {
    h[i] = lif ? vv[i] + inv_tau * (xv[i] - (vv[i] - cfg.v_reset)) : vv[i] + xv[i];
  }
  const float dv = lif ? 1.0f - inv_tau : 1.0f;
  const float dx = lif ? inv_tau : 1.0f;
  return tape.record(std::move(h), {v_prev, x}, [dv, dx](const Tensor& g, GradSink& sink) {
    if (sink.wants(0)) {
      Tensor& gv = sink.grad(0);
      for (int64_t i = 0; i < g.numel(); ++i) gv[i] += g[i] * dv;
    }
    if (sink.wants(1)) {
      Tensor& gx = sink.grad(1);
      for (int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * dx;
    }
  });
}

Var fire(Tape& tape, Var h, const NeuronConfig& cfg, const SurrogateConfig& sg) {
  const Tensor& hv = tape.value(h);
  Tensor s(hv.shape());
  for (int64_t i = 0; i < s.numel(); ++i) s[i] = hv[i] - cfg.v_threshold >= 0.0f ? 1.0f : 0.0f;
  return tape.record(std::move(s), {h},
                     [&tape, h, vth = cfg.v_threshold, sg](const Tensor& g, GradSink& sink) {
    const Tensor& hv = tape.value(h);
    Tensor& gh = sink.grad(0);
    for (int64_t i = 0; i < g.numel(); ++i) gh[i] += g[i] * surrogate_grad(hv[i] - vth, sg);
  });
}

Var reset(Tape& tape, Var h, Var s, const NeuronConfig& cfg) {
  const Tensor& hv = tape.value(h);
  const Tensor& sv = tape.value(s);
  require_same_shape(hv, sv, "reset");
  Tensor v(hv.shape());
  for (int64_t i = 0; i < v.numel(); ++i) v[i] = hv[i] * (1.0f - sv[i]) + cfg.v_reset * sv[i];
  return tape.record(std::move(v), {h, s},
                     [&tape, h, s, vr = cfg.v_reset, detach = cfg.detach_reset](const Tensor& g,
                                                                               GradSink& sink) {
    const Tensor& hv = tape.value(h);
    const Tensor& sv = tape.value(s);
    if (sink.wants(0)) {
      Tensor& gh = sink.grad(0);
      for (int64_t i = 0; i < g.numel(); ++i) gh[i] += g[i] * (1.0f - sv[i]);
    }
    if (!detach && sink.wants(1)) {
      Tensor& gs = sink.grad(1);
      for (int64_t i = 0; i < g.numel(); ++i) gs[i] += g[i] * (vr - hv[i]);
    }
  });
}

Var sn_step(Tape& tape, NeuronState& state, Var x_t, const NeuronConfig& cfg,
            const SurrogateConfig& sg) {
  Var h = charge(tape, state.v, x_t, cfg);
  Var s = fire(tape, h, cfg, sg);
  state.v = reset(tape, h, s, cfg);
  return s;
}

Var sn_sequence(Tape& tape, Var x_seq, const NeuronConfig& cfg, const SurrogateConfig& sg) {
  const Tensor& xv = tape.value(x_seq);
  if (xv.rank() < 2) throw ShapeError("sn_sequence expects (T, ...), got " + shape_str(xv.shape()));
  const int64_t steps = xv.dim(0);
  const int64_t per = xv.numel() / steps;
  const bool lif = cfg.kind == NeuronKind::kLIF;
  const float inv_tau = 1.0f / cfg.tau;
  const float vth = cfg.v_threshold;
  const float vr = cfg.v_reset;

  Tensor spikes(xv.shape());
  Tensor h_trace(xv.shape());
  std::vector<float> v(static_cast<size_t>(per), vr);
  for (int64_t t = 0; t < steps; ++t) {
    const float* x = xv.ptr() + t * per;
    float* hs = h_trace.ptr() + t * per;
    float* ss = spikes.ptr() + t * per;
    for (int64_t i = 0; i < per; ++i) {
      const float vp = v[static_cast<size_t>(i)];
      const float h = lif ? vp + inv_tau * (x[i] - (vp - vr)) : vp + x[i];
      const float s = h - vth >= 0.0f ? 1.0f : 0.0f;
      hs[i] = h;
      ss[i] = s;
      v[static_cast<size_t>(i)] = h * (1.0f - s) + vr * s;
    }
  }
  Tensor s_copy = spikes;
  return tape.record(
      std::move(spikes), {x_seq},
      [h_trace = std::move(h_trace), s = std::move(s_copy), steps, per, lif, inv_tau, vth, vr, sg,
       detach = cfg.detach_reset](const Tensor& g, GradSink& sink) {
        Tensor& gx = sink.grad(0);
        const float dh_dx = lif ? inv_tau : 1.0f;
        const float dh_dv = lif ? 1.0f - inv_tau : 1.0f;
        std::vector<float> gv(static_cast<size_t>(per), 0.0f);
        for (int64_t t = steps - 1; t >= 0; --t) {
          const float* hs = h_trace.ptr() + t * per;
          const float* ss = s.ptr() + t * per;
          const float* gs = g.ptr() + t * per;
          float* gxt = gx.ptr() + t * per;
          for (int64_t i = 0; i < per; ++i) {
            const float gvi = gv[static_cast<size_t>(i)];
            const float gs_total = gs[i] + (detach ? 0.0f : gvi * (vr - hs[i]));
            const float gh = gvi * (1.0f - ss[i]) + gs_total * surrogate_grad(hs[i] - vth, sg);
            gxt[i] += gh * dh_dx;
            gv[static_cast<size_t>(i)] = gh * dh_dv;
          }
        }
      });
}

}  // namespace spikestream
