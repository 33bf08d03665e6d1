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

#include "spikestream/numerics.h"

#include <cmath>
#include <limits>
#include <string>

namespace spikestream {
namespace {

struct ConvDims {
  int64_t batch, in_ch, h, w, out_ch, kh, kw, oh, ow;
  int stride, pad;
  int64_t k() const { return in_ch * kh * kw; }
  int64_t p() const { return oh * ow; }
};

ConvDims conv_dims(const Shape& xs, const Shape& ws, const ConvGeometry& g) {
  if (xs.size() < 4) throw ShapeError("conv2d expects (..., C, H, W), got " + shape_str(xs));
  if (ws.size() != 4) throw ShapeError("conv2d weight must be (O, C, kh, kw), got " + shape_str(ws));
  if (g.stride < 1 || g.padding < 0) throw ShapeError("conv2d: stride must be >= 1, padding >= 0");
  const size_t r = xs.size();
  ConvDims d{};
  d.batch = 1;
  for (size_t i = 0; i + 3 < r; ++i) d.batch *= xs[i];
  d.in_ch = xs[r - 3];
  d.h = xs[r - 2];
  d.w = xs[r - 1];
  d.out_ch = ws[0];
  d.kh = ws[2];
  d.kw = ws[3];
  if (ws[1] != d.in_ch) {
    throw ShapeError("conv2d: input " + shape_str(xs) + " has " + std::to_string(d.in_ch) +
                     " channels but weight " + shape_str(ws) + " expects " + std::to_string(ws[1]));
  }
  d.oh = conv_out_dim(d.h, d.kh, g);
  d.ow = conv_out_dim(d.w, d.kw, g);
  d.stride = g.stride;
  d.pad = g.padding;
  return d;
}

Shape conv_out_shape(const Shape& xs, const ConvDims& d) {
  Shape out(xs.begin(), xs.end() - 3);
  out.push_back(d.out_ch);
  out.push_back(d.oh);
  out.push_back(d.ow);
  return out;
}

// For kernel tap (i, j): the (output position, input position) pairs that
// fall inside the unpadded input.
std::vector<std::vector<std::pair<int32_t, int32_t>>> tap_pairs(const ConvDims& d) {
  std::vector<std::vector<std::pair<int32_t, int32_t>>> taps(static_cast<size_t>(d.kh * d.kw));
  for (int64_t i = 0; i < d.kh; ++i) {
    for (int64_t j = 0; j < d.kw; ++j) {
      auto& list = taps[static_cast<size_t>(i * d.kw + j)];
      for (int64_t oy = 0; oy < d.oh; ++oy) {
        const int64_t iy = oy * d.stride - d.pad + i;
        if (iy < 0 || iy >= d.h) continue;
        for (int64_t ox = 0; ox < d.ow; ++ox) {
          const int64_t ix = ox * d.stride - d.pad + j;
          if (ix < 0 || ix >= d.w) continue;
          list.emplace_back(static_cast<int32_t>(oy * d.ow + ox), static_cast<int32_t>(iy * d.w + ix));
        }
      }
    }
  }
  return taps;
}

// cols is (K, batch * P); column index b * P + p.
std::vector<float> im2col(const float* x, const ConvDims& d) {
  const int64_t np = d.batch * d.p();
  const int64_t plane_size = d.h * d.w;
  std::vector<float> cols(static_cast<size_t>(d.k() * np), 0.0f);
  const auto taps = tap_pairs(d);
  for (int64_t c = 0; c < d.in_ch; ++c) {
    for (int64_t t = 0; t < d.kh * d.kw; ++t) {
      const auto& list = taps[static_cast<size_t>(t)];
      float* row = cols.data() + (c * d.kh * d.kw + t) * np;
      for (int64_t b = 0; b < d.batch; ++b) {
        const float* plane = x + (b * d.in_ch + c) * plane_size;
        float* dst = row + b * d.p();
        for (const auto& [po, pi] : list) dst[po] = plane[pi];
      }
    }
  }
  return cols;
}

void col2im_add(const std::vector<float>& cols, const ConvDims& d, float* gx) {
  const int64_t np = d.batch * d.p();
  const int64_t plane_size = d.h * d.w;
  const auto taps = tap_pairs(d);
  for (int64_t c = 0; c < d.in_ch; ++c) {
    for (int64_t t = 0; t < d.kh * d.kw; ++t) {
      const auto& list = taps[static_cast<size_t>(t)];
      const float* row = cols.data() + (c * d.kh * d.kw + t) * np;
      for (int64_t b = 0; b < d.batch; ++b) {
        float* plane = gx + (b * d.in_ch + c) * plane_size;
        const float* src = row + b * d.p();
        for (const auto& [po, pi] : list) plane[pi] += src[po];
      }
    }
  }
}

// Dot product with eight fixed partial sums; deterministic and vectorisable.
float lane_dot(const float* a, const float* b, int64_t n) {
  float lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int l = 0; l < 8; ++l) lanes[l] += a[i + l] * b[i + l];
  }
  double s = 0.0;
  for (int l = 0; l < 8; ++l) s += lanes[l];
  for (; i < n; ++i) s += static_cast<double>(a[i] * b[i]);
  return static_cast<float>(s);
}

// Every output element sums its K products in increasing k, starting from 0,
// then adds the bias: the same order as a direct nested-loop convolution.
Tensor conv_forward_impl(const Tensor& x, const Tensor& weight, const Tensor* bias,
                         const ConvDims& d) {
  const int64_t np = d.batch * d.p();
  const int64_t kk = d.k();
  const std::vector<float> cols = im2col(x.ptr(), d);
  std::vector<float> acc(static_cast<size_t>(d.out_ch * np), 0.0f);
  const float* wp = weight.ptr();
  for (int64_t k = 0; k < kk; ++k) {
    const float* row = cols.data() + k * np;
    for (int64_t o = 0; o < d.out_ch; ++o) {
      const float w = wp[o * kk + k];
      if (w == 0.0f) continue;
      float* dst = acc.data() + o * np;
      for (int64_t n = 0; n < np; ++n) dst[n] += w * row[n];
    }
  }
  Tensor out(conv_out_shape(x.shape(), d));
  float* op = out.ptr();
  for (int64_t b = 0; b < d.batch; ++b) {
    for (int64_t o = 0; o < d.out_ch; ++o) {
      const float bv = bias ? (*bias)[o] : 0.0f;
      const float* src = acc.data() + o * np + b * d.p();
      float* dst = op + (b * d.out_ch + o) * d.p();
      for (int64_t p = 0; p < d.p(); ++p) dst[p] = src[p] + bv;
    }
  }
  return out;
}

int64_t channel_dim_index(const Tensor& x) {
  if (x.rank() < 2) throw ShapeError("expected (..., C, H, W) or (N, C), got " + shape_str(x.shape()));
  return x.rank() >= 4 ? x.rank() - 3 : 1;
}

// Splits x into (outer, C, inner) around the channel dim.
struct ChannelSplit {
  int64_t outer, ch, inner;
};

ChannelSplit channel_split(const Tensor& x) {
  const int64_t cdim = channel_dim_index(x);
  ChannelSplit s{1, x.dim(static_cast<int>(cdim)), 1};
  for (int i = 0; i < cdim; ++i) s.outer *= x.dim(i);
  for (int i = static_cast<int>(cdim) + 1; i < x.rank(); ++i) s.inner *= x.dim(i);
  return s;
}

void require_channels(const Tensor& t, int64_t ch, const char* what) {
  if (t.rank() != 1 || t.dim(0) != ch) {
    throw ShapeError(std::string(what) + " must have shape (" + std::to_string(ch) + "), got " +
                     shape_str(t.shape()));
  }
}

}  // namespace

int64_t conv_out_dim(int64_t in, int64_t kernel, const ConvGeometry& g) {
  const int64_t padded = in + 2 * static_cast<int64_t>(g.padding);
  if (kernel > padded) {
    throw ShapeError("conv2d: kernel " + std::to_string(kernel) + " exceeds padded input " +
                     std::to_string(padded));
  }
  if ((padded - kernel) % g.stride != 0) {
    throw ShapeError("conv2d: output size (" + std::to_string(in) + " + 2*" +
                     std::to_string(g.padding) + " - " + std::to_string(kernel) + ")/" +
                     std::to_string(g.stride) + " + 1 is not an integer");
  }
  return (padded - kernel) / g.stride + 1;
}

BnParams make_bn_params(const Tensor& gamma, const Tensor& beta, const BnRunningStats& stats,
                        float eps) {
  BnParams p{gamma, beta, stats.mean, Tensor::zeros_like(stats.var)};
  for (int64_t i = 0; i < stats.var.numel(); ++i) {
    p.std[i] = static_cast<float>(std::sqrt(static_cast<double>(stats.var[i]) + eps));
  }
  return p;
}

Tensor conv2d_forward(const Tensor& x, const ConvParams& p) {
  const ConvDims d = conv_dims(x.shape(), p.weight.shape(), p.geometry);
  if (p.bias) require_channels(*p.bias, d.out_ch, "conv2d bias");
  return conv_forward_impl(x, p.weight, p.bias ? &*p.bias : nullptr, d);
}

Tensor batchnorm_inference(const Tensor& x, const BnParams& p) {
  const ChannelSplit s = channel_split(x);
  require_channels(p.gamma, s.ch, "bn gamma");
  require_channels(p.beta, s.ch, "bn beta");
  require_channels(p.mean, s.ch, "bn mean");
  require_channels(p.std, s.ch, "bn std");
  Tensor y(x.shape());
  for (int64_t o = 0; o < s.outer; ++o) {
    for (int64_t c = 0; c < s.ch; ++c) {
      const float g = p.gamma[c], b = p.beta[c], m = p.mean[c], sd = p.std[c];
      const int64_t base = (o * s.ch + c) * s.inner;
      for (int64_t i = 0; i < s.inner; ++i) y[base + i] = g * (x[base + i] - m) / sd + b;
    }
  }
  return y;
}

ConvParams fuse_conv_bn(const ConvParams& conv, const BnParams& bn) {
  const Shape& ws = conv.weight.shape();
  if (ws.size() != 4) throw ShapeError("fuse_conv_bn: bad weight shape " + shape_str(ws));
  const int64_t oc = ws[0];
  if (bn.gamma.numel() != oc || bn.beta.numel() != oc || bn.mean.numel() != oc ||
      bn.std.numel() != oc) {
    throw ShapeError("fuse_conv_bn: conv has " + std::to_string(oc) +
                     " output channels but bn has " + std::to_string(bn.gamma.numel()));
  }
  ConvParams out{conv.weight, Tensor::zeros({oc}), conv.geometry};
  const int64_t per = conv.weight.numel() / oc;
  for (int64_t o = 0; o < oc; ++o) {
    const double scale = static_cast<double>(bn.gamma[o]) / static_cast<double>(bn.std[o]);
    for (int64_t k = 0; k < per; ++k) {
      out.weight[o * per + k] = static_cast<float>(scale * conv.weight[o * per + k]);
    }
    const double b0 = conv.bias ? (*conv.bias)[o] : 0.0;
    (*out.bias)[o] = static_cast<float>((b0 - bn.mean[o]) * scale + bn.beta[o]);
  }
  return out;
}

Var conv2d(Tape& tape, Var x, Var weight, std::optional<Var> bias, ConvGeometry g) {
  const Tensor& xv = tape.value(x);
  const Tensor& wv = tape.value(weight);
  const ConvDims d = conv_dims(xv.shape(), wv.shape(), g);
  const Tensor* bv = nullptr;
  if (bias) {
    bv = &tape.value(*bias);
    require_channels(*bv, d.out_ch, "conv2d bias");
  }
  Tensor out = conv_forward_impl(xv, wv, bv, d);
  tape.note_synaptic_op();
  std::vector<Var> inputs{x, weight};
  if (bias) inputs.push_back(*bias);
  return tape.record(std::move(out), std::move(inputs),
                     [&tape, x, weight, d, has_bias = bias.has_value()](const Tensor& gout,
                                                                        GradSink& sink) {
    const int64_t np = d.batch * d.p();
    const int64_t kk = d.k();
    // gout (B, O, P) -> (O, B*P)
    std::vector<float> gm(static_cast<size_t>(d.out_ch * np));
    for (int64_t b = 0; b < d.batch; ++b) {
      for (int64_t o = 0; o < d.out_ch; ++o) {
        const float* src = gout.ptr() + (b * d.out_ch + o) * d.p();
        float* dst = gm.data() + o * np + b * d.p();
        for (int64_t p = 0; p < d.p(); ++p) dst[p] = src[p];
      }
    }
    if (has_bias && sink.wants(2)) {
      Tensor& gb = sink.grad(2);
      for (int64_t o = 0; o < d.out_ch; ++o) {
        double s = 0.0;
        const float* row = gm.data() + o * np;
        for (int64_t n = 0; n < np; ++n) s += row[n];
        gb[o] += static_cast<float>(s);
      }
    }
    const bool want_x = sink.wants(0);
    const bool want_w = sink.wants(1);
    if (!want_x && !want_w) return;
    const std::vector<float> cols = im2col(tape.value(x).ptr(), d);
    if (want_w) {
      Tensor& gw = sink.grad(1);
      for (int64_t o = 0; o < d.out_ch; ++o) {
        const float* grow = gm.data() + o * np;
        for (int64_t k = 0; k < kk; ++k) {
          const float* crow = cols.data() + k * np;
          gw[o * kk + k] += lane_dot(grow, crow, np);
        }
      }
    }
    if (want_x) {
      const float* wp = tape.value(weight).ptr();
      std::vector<float> gcols(cols.size(), 0.0f);
      for (int64_t k = 0; k < kk; ++k) {
        float* dst = gcols.data() + k * np;
        for (int64_t o = 0; o < d.out_ch; ++o) {
          const float w = wp[o * kk + k];
          if (w == 0.0f) continue;
          const float* grow = gm.data() + o * np;
          for (int64_t n = 0; n < np; ++n) dst[n] += w * grow[n];
        }
      }
      col2im_add(gcols, d, sink.grad(0).ptr());
    }
  });
}

Var conv2d(Tape& tape, Var x, const ConvParams& p) {
  Var w = tape.leaf(p.weight);
  std::optional<Var> b;
  if (p.bias) b = tape.leaf(*p.bias);
  return conv2d(tape, x, w, b, p.geometry);
}

Var batchnorm_train(Tape& tape, Var x, Var gamma, Var beta, BnRunningStats& stats,
                    float momentum, float eps) {
  const Tensor& xv = tape.value(x);
  const ChannelSplit s = channel_split(xv);
  const Tensor& gv = tape.value(gamma);
  const Tensor& bv = tape.value(beta);
  require_channels(gv, s.ch, "bn gamma");
  require_channels(bv, s.ch, "bn beta");
  require_channels(stats.mean, s.ch, "bn running mean");
  require_channels(stats.var, s.ch, "bn running var");
  const int64_t count = s.outer * s.inner;
  if (count < 1) throw ShapeError("batchnorm over an empty batch");

  Tensor xhat(xv.shape());
  Tensor out(xv.shape());
  std::vector<float> inv_std(static_cast<size_t>(s.ch));
  for (int64_t c = 0; c < s.ch; ++c) {
    double sum = 0.0;
    for (int64_t o = 0; o < s.outer; ++o) {
      const float* p = xv.ptr() + (o * s.ch + c) * s.inner;
      for (int64_t i = 0; i < s.inner; ++i) sum += p[i];
    }
    const double mean = sum / static_cast<double>(count);
    double sq = 0.0;
    for (int64_t o = 0; o < s.outer; ++o) {
      const float* p = xv.ptr() + (o * s.ch + c) * s.inner;
      for (int64_t i = 0; i < s.inner; ++i) {
        const double dv = p[i] - mean;
        sq += dv * dv;
      }
    }
    const double var = sq / static_cast<double>(count);
    const double istd = 1.0 / std::sqrt(var + eps);
    inv_std[static_cast<size_t>(c)] = static_cast<float>(istd);
    for (int64_t o = 0; o < s.outer; ++o) {
      const int64_t base = (o * s.ch + c) * s.inner;
      for (int64_t i = 0; i < s.inner; ++i) {
        const float xh = static_cast<float>((xv[base + i] - mean) * istd);
        xhat[base + i] = xh;
        out[base + i] = gv[c] * xh + bv[c];
      }
    }
    const double unbiased = count > 1 ? var * count / (count - 1) : var;
    stats.mean[c] = static_cast<float>((1.0 - momentum) * stats.mean[c] + momentum * mean);
    stats.var[c] = static_cast<float>((1.0 - momentum) * stats.var[c] + momentum * unbiased);
  }
  return tape.record(std::move(out), {x, gamma, beta},
                     [&tape, gamma, s, count, xhat = std::move(xhat),
                      inv_std = std::move(inv_std)](const Tensor& gout, GradSink& sink) {
    const Tensor& gv = tape.value(gamma);
    Tensor* gx = sink.wants(0) ? &sink.grad(0) : nullptr;
    Tensor* gg = sink.wants(1) ? &sink.grad(1) : nullptr;
    Tensor* gb = sink.wants(2) ? &sink.grad(2) : nullptr;
    for (int64_t c = 0; c < s.ch; ++c) {
      double sum_dy = 0.0, sum_dy_xh = 0.0;
      for (int64_t o = 0; o < s.outer; ++o) {
        const int64_t base = (o * s.ch + c) * s.inner;
        for (int64_t i = 0; i < s.inner; ++i) {
          sum_dy += gout[base + i];
          sum_dy_xh += static_cast<double>(gout[base + i]) * xhat[base + i];
        }
      }
      if (gg) (*gg)[c] += static_cast<float>(sum_dy_xh);
      if (gb) (*gb)[c] += static_cast<float>(sum_dy);
      if (gx) {
        const double n = static_cast<double>(count);
        const double k = gv[c] * inv_std[static_cast<size_t>(c)] / n;
        for (int64_t o = 0; o < s.outer; ++o) {
          const int64_t base = (o * s.ch + c) * s.inner;
          for (int64_t i = 0; i < s.inner; ++i) {
            (*gx)[base + i] += static_cast<float>(
                k * (n * gout[base + i] - sum_dy - xhat[base + i] * sum_dy_xh));
          }
        }
      }
    }
  });
}

Var batchnorm_infer(Tape& tape, Var x, Var gamma, Var beta, const Tensor& mean,
                    const Tensor& std) {
  const Tensor& xv = tape.value(x);
  BnParams p{tape.value(gamma), tape.value(beta), mean, std};
  Tensor out = batchnorm_inference(xv, p);
  const ChannelSplit s = channel_split(xv);
  return tape.record(std::move(out), {x, gamma, beta},
                     [&tape, x, gamma, s, mean, std](const Tensor& gout, GradSink& sink) {
    const Tensor& xv = tape.value(x);
    const Tensor& gv = tape.value(gamma);
    Tensor* gx = sink.wants(0) ? &sink.grad(0) : nullptr;
    Tensor* gg = sink.wants(1) ? &sink.grad(1) : nullptr;
    Tensor* gb = sink.wants(2) ? &sink.grad(2) : nullptr;
    for (int64_t c = 0; c < s.ch; ++c) {
      double sg = 0.0, sb = 0.0;
      for (int64_t o = 0; o < s.outer; ++o) {
        const int64_t base = (o * s.ch + c) * s.inner;
        for (int64_t i = 0; i < s.inner; ++i) {
          const float dy = gout[base + i];
          sb += dy;
          sg += static_cast<double>(dy) * (xv[base + i] - mean[c]) / std[c];
          if (gx) (*gx)[base + i] += dy * gv[c] / std[c];
        }
      }
      if (gg) (*gg)[c] += static_cast<float>(sg);
      if (gb) (*gb)[c] += static_cast<float>(sb);
    }
  });
}

Var linear(Tape& tape, Var x, Var weight, Var bias) {
  const Tensor& xv = tape.value(x);
  const Tensor& wv = tape.value(weight);
  const Tensor& bv = tape.value(bias);
  if (xv.rank() != 2 || wv.rank() != 2 || xv.dim(1) != wv.dim(1)) {
    throw ShapeError("linear: input " + shape_str(xv.shape()) + " incompatible with weight " +
                     shape_str(wv.shape()));
  }
  const int64_t n = xv.dim(0), in = xv.dim(1), out_f = wv.dim(0);
  require_channels(bv, out_f, "linear bias");
  Tensor y({n, out_f});
  for (int64_t r = 0; r < n; ++r) {
    for (int64_t o = 0; o < out_f; ++o) {
      float acc = 0.0f;
      for (int64_t i = 0; i < in; ++i) acc += xv[r * in + i] * wv[o * in + i];
      y[r * out_f + o] = acc + bv[o];
    }
  }
  tape.note_synaptic_op();
  return tape.record(std::move(y), {x, weight, bias},
                     [&tape, x, weight, n, in, out_f](const Tensor& g, GradSink& sink) {
    const Tensor& xv = tape.value(x);
    const Tensor& wv = tape.value(weight);
    if (sink.wants(0)) {
      Tensor& gx = sink.grad(0);
      for (int64_t r = 0; r < n; ++r)
        for (int64_t o = 0; o < out_f; ++o)
          for (int64_t i = 0; i < in; ++i) gx[r * in + i] += g[r * out_f + o] * wv[o * in + i];
    }
    if (sink.wants(1)) {
      Tensor& gw = sink.grad(1);
      for (int64_t r = 0; r < n; ++r)
        for (int64_t o = 0; o < out_f; ++o)
          for (int64_t i = 0; i < in; ++i) gw[o * in + i] += g[r * out_f + o] * xv[r * in + i];
    }
    if (sink.wants(2)) {
      Tensor& gb = sink.grad(2);
      for (int64_t r = 0; r < n; ++r)
        for (int64_t o = 0; o < out_f; ++o) gb[o] += g[r * out_f + o];
    }
  });
}

Var avg_pool(Tape& tape, Var x, int window) {
  const Tensor& xv = tape.value(x);
  if (xv.rank() < 2) throw ShapeError("avg_pool expects (..., H, W), got " + shape_str(xv.shape()));
  if (window < 1) throw ShapeError("avg_pool: window must be positive");
  const int64_t h = xv.dim(-2), w = xv.dim(-1);
  if (h % window != 0 || w % window != 0) {
    throw ShapeError("avg_pool: spatial dims " + shape_str(xv.shape()) +
                     " not divisible by window " + std::to_string(window));
  }
  const int64_t oh = h / window, ow = w / window;
  const int64_t planes = xv.numel() / (h * w);
  Shape os = xv.shape();
  os[os.size() - 2] = oh;
  os[os.size() - 1] = ow;
  Tensor y(os);
  const float inv = 1.0f / static_cast<float>(window * window);
  for (int64_t pl = 0; pl < planes; ++pl) {
    for (int64_t oy = 0; oy < oh; ++oy) {
      for (int64_t ox = 0; ox < ow; ++ox) {
        float acc = 0.0f;
        for (int64_t i = 0; i < window; ++i)
          for (int64_t j = 0; j < window; ++j)
            acc += xv[(pl * h + oy * window + i) * w + ox * window + j];
        y[(pl * oh + oy) * ow + ox] = acc * inv;
      }
    }
  }
  return tape.record(std::move(y), {x}, [=](const Tensor& g, GradSink& sink) {
    Tensor& gx = sink.grad(0);
    for (int64_t pl = 0; pl < planes; ++pl)
      for (int64_t oy = 0; oy < oh; ++oy)
        for (int64_t ox = 0; ox < ow; ++ox) {
          const float v = g[(pl * oh + oy) * ow + ox] * inv;
          for (int64_t i = 0; i < window; ++i)
            for (int64_t j = 0; j < window; ++j) gx[(pl * h + oy * window + i) * w + ox * window + j] += v;
        }
  });
}

Var global_avg_pool(Tape& tape, Var x) {
  const Tensor& xv = tape.value(x);
  if (xv.rank() < 3) throw ShapeError("global_avg_pool expects (..., H, W), got " + shape_str(xv.shape()));
  const int64_t hw = xv.dim(-2) * xv.dim(-1);
  Shape os(xv.shape().begin(), xv.shape().end() - 2);
  Tensor y(os);
  const int64_t planes = y.numel();
  for (int64_t pl = 0; pl < planes; ++pl) {
    float acc = 0.0f;
    for (int64_t i = 0; i < hw; ++i) acc += xv[pl * hw + i];
    y[pl] = acc / static_cast<float>(hw);
  }
  return tape.record(std::move(y), {x}, [=](const Tensor& g, GradSink& sink) {
    Tensor& gx = sink.grad(0);
    for (int64_t pl = 0; pl < planes; ++pl) {
      const float v = g[pl] / static_cast<float>(hw);
      for (int64_t i = 0; i < hw; ++i) gx[pl * hw + i] += v;
    }
  });
}

Var add(Tape& tape, Var a, Var b) {
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  require_same_shape(av, bv, "add");
  Tensor y = av;
  y += bv;
  return tape.record(std::move(y), {a, b}, [](const Tensor& g, GradSink& sink) {
    if (sink.wants(0)) sink.grad(0) += g;
    if (sink.wants(1)) sink.grad(1) += g;
  });
}

Var sub(Tape& tape, Var a, Var b) {
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  require_same_shape(av, bv, "sub");
  Tensor y = av;
  for (int64_t i = 0; i < y.numel(); ++i) y[i] -= bv[i];
  return tape.record(std::move(y), {a, b}, [](const Tensor& g, GradSink& sink) {
    if (sink.wants(0)) sink.grad(0) += g;
    if (sink.wants(1)) {
      Tensor& gb = sink.grad(1);
      for (int64_t i = 0; i < g.numel(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Tape& tape, Var a, Var b) {
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  require_same_shape(av, bv, "mul");
  Tensor y = av;
  for (int64_t i = 0; i < y.numel(); ++i) y[i] *= bv[i];
  return tape.record(std::move(y), {a, b}, [&tape, a, b](const Tensor& g, GradSink& sink) {
    const Tensor& av = tape.value(a);
    const Tensor& bv = tape.value(b);
    if (sink.wants(0)) {
      Tensor& ga = sink.grad(0);
      for (int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * bv[i];
    }
    if (sink.wants(1)) {
      Tensor& gb = sink.grad(1);
      for (int64_t i = 0; i < g.numel(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Tape& tape, Var a, float s) {
  Tensor y = tape.value(a);
  y *= s;
  return tape.record(std::move(y), {a}, [s](const Tensor& g, GradSink& sink) {
    Tensor& ga = sink.grad(0);
    for (int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * s;
  });
}

Var reshape(Tape& tape, Var a, Shape shape) {
  const Shape orig = tape.value(a).shape();
  Tensor y = tape.value(a).reshaped(std::move(shape));
  return tape.record(std::move(y), {a}, [orig](const Tensor& g, GradSink& sink) {
    Tensor& ga = sink.grad(0);
    for (int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
  });
}

Var sum_time(Tape& tape, Var a) {
  const Tensor& av = tape.value(a);
  if (av.rank() < 2) throw ShapeError("sum_time expects (T, ...), got " + shape_str(av.shape()));
  const int64_t steps = av.dim(0);
  const int64_t per = av.numel() / steps;
  Tensor y(Shape(av.shape().begin() + 1, av.shape().end()));
  for (int64_t t = 0; t < steps; ++t)
    for (int64_t i = 0; i < per; ++i) y[i] += av[t * per + i];
  return tape.record(std::move(y), {a}, [steps, per](const Tensor& g, GradSink& sink) {
    Tensor& ga = sink.grad(0);
    for (int64_t t = 0; t < steps; ++t)
      for (int64_t i = 0; i < per; ++i) ga[t * per + i] += g[i];
  });
}

Var select_time(Tape& tape, Var a, int64_t t) {
  const Tensor& av = tape.value(a);
  if (av.rank() < 1 || t < 0 || t >= av.dim(0)) {
    throw ShapeError("select_time: step " + std::to_string(t) + " out of range for " +
                     shape_str(av.shape()));
  }
  const int64_t per = av.numel() / av.dim(0);
  Tensor y(Shape(av.shape().begin() + 1, av.shape().end()));
  std::copy(av.ptr() + t * per, av.ptr() + (t + 1) * per, y.ptr());
  return tape.record(std::move(y), {a}, [t, per](const Tensor& g, GradSink& sink) {
    Tensor& ga = sink.grad(0);
    for (int64_t i = 0; i < per; ++i) ga[t * per + i] += g[i];
  });
}

Var stack_time(Tape& tape, std::span<const Var> steps) {
  if (steps.empty()) throw ShapeError("stack_time needs at least one step");
  const Shape step_shape = tape.value(steps[0]).shape();
  Shape s{static_cast<int64_t>(steps.size())};
  s.insert(s.end(), step_shape.begin(), step_shape.end());
  Tensor y(s);
  const int64_t per = shape_numel(step_shape);
  for (size_t t = 0; t < steps.size(); ++t) {
    const Tensor& v = tape.value(steps[t]);
    if (v.shape() != step_shape) throw ShapeError("stack_time: step shapes differ");
    std::copy(v.ptr(), v.ptr() + per, y.ptr() + static_cast<int64_t>(t) * per);
  }
  return tape.record(std::move(y), std::vector<Var>(steps.begin(), steps.end()),
                     [n = steps.size(), per](const Tensor& g, GradSink& sink) {
    for (size_t t = 0; t < n; ++t) {
      if (!sink.wants(static_cast<int>(t))) continue;
      Tensor& gt = sink.grad(static_cast<int>(t));
      for (int64_t i = 0; i < per; ++i) gt[i] += g[static_cast<int64_t>(t) * per + i];
    }
  });
}

Var sum_all(Tape& tape, Var a) {
  const Tensor& av = tape.value(a);
  Tensor y(Shape{}, static_cast<float>(av.sum()));
  return tape.record(std::move(y), {a}, [](const Tensor& g, GradSink& sink) {
    Tensor& ga = sink.grad(0);
    for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += g[0];
  });
}

Var dot_const(Tape& tape, Var a, const Tensor& coeffs) {
  const Tensor& av = tape.value(a);
  require_same_shape(av, coeffs, "dot_const");
  double s = 0.0;
  for (int64_t i = 0; i < av.numel(); ++i) s += static_cast<double>(av[i]) * coeffs[i];
  return tape.record(Tensor(Shape{}, static_cast<float>(s)), {a},
                     [coeffs](const Tensor& g, GradSink& sink) {
    Tensor& ga = sink.grad(0);
    for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += g[0] * coeffs[i];
  });
}

Var softmax_cross_entropy(Tape& tape, Var logits, std::span<const int> labels) {
  const Tensor& lv = tape.value(logits);
  if (lv.rank() != 2) throw ShapeError("cross entropy expects (N, classes), got " + shape_str(lv.shape()));
  const int64_t n = lv.dim(0), k = lv.dim(1);
  if (static_cast<int64_t>(labels.size()) != n) {
    throw ShapeError("cross entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                     std::to_string(n));
  }
  Tensor prob(lv.shape());
  double loss = 0.0;
  for (int64_t r = 0; r < n; ++r) {
    const int y = labels[static_cast<size_t>(r)];
    if (y < 0 || y >= k) {
      throw std::out_of_range("label " + std::to_string(y) + " outside [0, " + std::to_string(k) + ")");
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (int64_t c = 0; c < k; ++c) mx = std::max(mx, static_cast<double>(lv[r * k + c]));
    double z = 0.0;
    for (int64_t c = 0; c < k; ++c) z += std::exp(lv[r * k + c] - mx);
    for (int64_t c = 0; c < k; ++c) prob[r * k + c] = static_cast<float>(std::exp(lv[r * k + c] - mx) / z);
    loss += std::log(z) + mx - lv[r * k + y];
  }
  std::vector<int> ys(labels.begin(), labels.end());
  return tape.record(Tensor(Shape{}, static_cast<float>(loss / static_cast<double>(n))), {logits},
                     [prob = std::move(prob), ys = std::move(ys), n, k](const Tensor& g,
                                                                        GradSink& sink) {
    Tensor& gl = sink.grad(0);
    const float s = g[0] / static_cast<float>(n);
    for (int64_t r = 0; r < n; ++r) {
      for (int64_t c = 0; c < k; ++c) {
        const float onehot = c == ys[static_cast<size_t>(r)] ? 1.0f : 0.0f;
        gl[r * k + c] += s * (prob[r * k + c] - onehot);
      }
    }
  });
}

}  // namespace spikestream
