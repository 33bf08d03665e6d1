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

#include "spikestream/tensor.h"

#include <gtest/gtest.h>

#include <set>

#include "spikestream/tape.h"

namespace spikestream {
namespace {

TEST(TensorTest, ShapeAndIndexing) {
  Tensor t({2, 3, 4});
  EXPECT_EQ(t.numel(), 24);
  EXPECT_EQ(t.dim(-1), 4);
  t.at({1, 2, 3}) = 5.0f;
  EXPECT_EQ(t[23], 5.0f);
  EXPECT_THROW(t.at({2, 0, 0}), ShapeError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<float>(3)), ShapeError);
}

TEST(TensorTest, ReshapeKeepsData) {
  Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor r = t.reshaped({3, 2});
  EXPECT_EQ(r.shape(), (Shape{3, 2}));
  EXPECT_EQ(r[5], 6.0f);
  EXPECT_THROW(t.reshaped({4, 2}), ShapeError);
}

TEST(TensorTest, BinaryDetection) {
  EXPECT_TRUE(Tensor({3}, {0, 1, 1}).is_binary());
  EXPECT_FALSE(Tensor({3}, {0, 2, 1}).is_binary());
  EXPECT_FALSE(Tensor({1}, {0.5f}).is_binary());
}

TEST(RngTest, DeterministicAndInRange) {
  Rng a(7), b(7);
  for (int i = 0; i < 1000; ++i) {
    const float u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GE(u, 0.0f);
    EXPECT_LT(u, 1.0f);
  }
  std::set<int64_t> seen;
  for (int i = 0; i < 200; ++i) seen.insert(a.below(5));
  EXPECT_EQ(seen.size(), 5u);
}

TEST(RngTest, NormalMoments) {
  Rng rng(1);
  double s = 0, s2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / n, 0.0, 0.03);
  EXPECT_NEAR(s2 / n, 1.0, 0.05);
}

TEST(TapeTest, FanOutGradientsAccumulate) {
  Tape tape;
  Var x = tape.leaf(Tensor({2}, {1.0f, 2.0f}), true);
  Var y = tape.record(Tensor({2}, {2.0f, 4.0f}), {x, x},
                      [](const Tensor& g, GradSink& sink) {
                        sink.grad(0) += g;
                        sink.grad(1) += g;
                      });
  Gradients grads = tape.backward(y, Tensor({2}, {1.0f, 1.0f}));
  EXPECT_EQ(grads.of(x), Tensor({2}, {2.0f, 2.0f}));
}

TEST(TapeTest, ReverseOrderAndSingleUse) {
  Tape tape;
  Var x = tape.leaf(Tensor({1}, {1.0f}), true);
  Var y = tape.record(Tensor({1}, {1.0f}), {x}, [](const Tensor& g, GradSink& s) { s.grad(0) += g; });
  Var z = tape.record(Tensor({1}, {1.0f}), {y}, [](const Tensor& g, GradSink& s) { s.grad(0) += g; });
  std::vector<int32_t> visits;
  tape.set_visit_observer([&](int32_t id) { visits.push_back(id); });
  tape.backward(z);
  ASSERT_GE(visits.size(), 2u);
  for (size_t i = 1; i < visits.size(); ++i) EXPECT_LT(visits[i], visits[i - 1]);
  EXPECT_THROW(tape.backward(z), TapeError);
}

TEST(TapeTest, ParameterLeafIsCached) {
  Parameter p{"w", Tensor({2}, 1.0f)};
  Tape tape;
  Var a = tape.param(p);
  Var b = tape.param(p);
  EXPECT_EQ(a.id, b.id);
  EXPECT_THROW(Tape().backward(Var{}), TapeError);
}

}  // namespace
}  // namespace spikestream
