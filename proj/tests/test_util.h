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

#ifndef SPIKESTREAM_TESTS_TEST_UTIL_H_
#define SPIKESTREAM_TESTS_TEST_UTIL_H_

#include <cmath>
#include <functional>

#include "spikestream/tape.h"
#include "spikestream/tensor.h"

namespace spikestream::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, float scale = 1.0f) {
  Tensor t(std::move(shape));
  for (float& v : t.data()) v = scale * rng.normal();
  return t;
}

inline Tensor random_spikes(Shape shape, Rng& rng, float p = 0.5f) {
  Tensor t(std::move(shape));
  for (float& v : t.data()) v = rng.uniform() < p ? 1.0f : 0.0f;
  return t;
}

// Scalar function of one tensor built on a fresh tape each call.
using ScalarFn = std::function<Var(Tape&, Var)>;

inline double eval_scalar(const ScalarFn& f, const Tensor& x) {
  Tape tape(false);
  Var in = tape.leaf(x);
  return tape.value(f(tape, in))[0];
}

inline Tensor analytic_grad(const ScalarFn& f, const Tensor& x) {
  Tape tape;
  Var in = tape.leaf(x, true);
  Var out = f(tape, in);
  return tape.backward(out).of(in);
}

// Central differences on every element of x.
inline Tensor numeric_grad(const ScalarFn& f, const Tensor& x, float h = 1e-2f) {
  Tensor g(x.shape());
  Tensor probe = x;
  for (int64_t i = 0; i < x.numel(); ++i) {
    const float orig = probe[i];
    probe[i] = orig + h;
    const double up = eval_scalar(f, probe);
    probe[i] = orig - h;
    const double down = eval_scalar(f, probe);
    probe[i] = orig;
    g[i] = static_cast<float>((up - down) / (2.0 * h));
  }
  return g;
}

// Largest |a - b| / max(|a|, |b|, floor) over all elements.
inline double max_rel_error(const Tensor& a, const Tensor& b, double floor = 1.0) {
  double worst = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    const double d = std::abs(static_cast<double>(a[i]) - b[i]);
    const double s = std::max({std::abs(static_cast<double>(a[i])),
                               std::abs(static_cast<double>(b[i])), floor});
    worst = std::max(worst, d / s);
  }
  return worst;
}

}  // namespace spikestream::testing

#endif  // SPIKESTREAM_TESTS_TEST_UTIL_H_
