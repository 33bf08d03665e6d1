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

#include "spikestream/train.h"

#include <gtest/gtest.h>

#include <cmath>

namespace spikestream {
namespace {

TEST(DualLossTest, UniformLogits) {
  const int classes = 5;
  Tape tape;
  DualLogits d;
  d.spike = tape.leaf(Tensor::zeros({3, classes}));
  d.accumulation = tape.leaf(Tensor::zeros({3, classes}));
  const std::vector<int> labels{0, 4, 2};
  LossParts l = dual_loss(tape, d, labels);
  EXPECT_NEAR(tape.value(l.total)[0], 2.0 * std::log(classes), 1e-5);
  EXPECT_NEAR(tape.value(l.spike)[0], std::log(classes), 1e-6);
  d.mode = InferenceMode::kFsnn;
  d.accumulation.reset();
  LossParts f = dual_loss(tape, d, labels);
  EXPECT_FALSE(f.accumulation.has_value());
  EXPECT_NEAR(tape.value(f.total)[0], std::log(classes), 1e-6);
}

TEST(SgdTest, TwoMomentumStepsClosedForm) {
  Parameter p{"p", Tensor({3})};
  p.value[0] = 1.0f;
  p.value[1] = -2.0f;
  p.value[2] = 0.5f;
  const Tensor theta0 = p.value;
  Tensor coeffs({3});
  coeffs[0] = 0.3f;
  coeffs[1] = -1.0f;
  coeffs[2] = 2.0f;
  Sgd opt({&p}, 0.9f);
  const float lr = 0.1f;
  for (int step = 0; step < 2; ++step) {
    Tape tape;
    Var loss = dot_const(tape, tape.param(p), coeffs);  // gradient is `coeffs`
    opt.step(tape.backward(loss), lr);
  }
  // v1 = g, v2 = 1.9 g; theta2 = theta0 - lr (1 + 1.9) g
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p.value[i], theta0[i] - lr * 2.9f * coeffs[i], 1e-6);
}

TEST(SgdTest, WeightDecayAndMissingGradient) {
  Parameter p{"p", Tensor::full({1}, 2.0f)};
  Parameter idle{"idle", Tensor::full({1}, 3.0f)};
  Sgd opt({&p, &idle}, 0.0f, 0.5f);
  Tape tape;
  Var loss = sum_all(tape, tape.param(p));
  opt.step(tape.backward(loss), 0.1f);
  EXPECT_NEAR(p.value[0], 2.0f - 0.1f * (1.0f + 0.5f * 2.0f), 1e-6);
  EXPECT_NEAR(idle.value[0], 3.0f - 0.1f * 0.5f * 3.0f, 1e-6);
}

TEST(ScheduleTest, CosineAndStep) {
  EXPECT_DOUBLE_EQ(cosine_lr(0, 10, 0.1), 0.1);
  EXPECT_NEAR(cosine_lr(5, 10, 0.1), 0.05, 1e-12);
  EXPECT_NEAR(cosine_lr(10, 10, 0.1), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(step_lr(29, 30, 0.1, 1.0), 1.0);
  EXPECT_NEAR(step_lr(30, 30, 0.1, 1.0), 0.1, 1e-12);
  EXPECT_NEAR(step_lr(65, 30, 0.1, 1.0), 0.01, 1e-12);
  TrainConfig c;
  c.epochs = 4;
  EXPECT_NEAR(scheduled_lr(c, 2), c.lr * 0.5, 1e-7);
  c.schedule = Schedule::kConstant;
  EXPECT_FLOAT_EQ(static_cast<float>(scheduled_lr(c, 3)), c.lr);
  EXPECT_THROW(parse_schedule("linear"), std::invalid_argument);
}

NetworkConfig tiny() {
  NetworkConfig c;
  c.in_channels = 2;
  c.height = c.width = 3;
  c.stem_channels = 4;
  c.stages = {StageConfig{2, 4, false}};
  c.time_steps = 4;
  return c;
}

TEST(EvaluateTest, UntrainedNearChance) {
  Network net = Network::build(tiny(), 2);
  Dataset d = synth_two_class(200, 4, 3);
  EvalResult r = evaluate(net, d, InferenceMode::kDsnn);
  EXPECT_EQ(r.samples, 200);
  EXPECT_NEAR(r.accuracy, 0.5, 0.1);
  ASSERT_TRUE(r.acc_a.has_value());
  EvalResult f = evaluate(net, d, InferenceMode::kFsnn);
  EXPECT_FALSE(f.acc_a.has_value());
  EXPECT_DOUBLE_EQ(f.acc_s, r.acc_s);
}

TEST(TrainTest, DeterministicAndLearns) {
  Dataset d = synth_two_class(64, 4, 4);
  TrainConfig c;
  c.epochs = 8;
  c.lr = 0.1f;
  c.batch_size = 16;
  c.seed = 9;
  Network a = Network::build(tiny(), 1);
  Network b = Network::build(tiny(), 1);
  int calls = 0;
  auto ra = train(a, d, c, [&](const EpochRecord&) { ++calls; });
  auto rb = train(b, d, c);
  EXPECT_EQ(calls, 8);
  ASSERT_EQ(ra.size(), 8u);
  for (size_t i = 0; i < ra.size(); ++i) EXPECT_EQ(ra[i].to_json(), rb[i].to_json());
  EXPECT_LT(ra.back().loss_s, ra.front().loss_s);
  EXPECT_GT(ra.back().loss_a, 0.0);
  EXPECT_GE(evaluate(a, d, InferenceMode::kDsnn).accuracy, 0.8);

  c.dual_stream = false;
  Network f = Network::build(tiny(), 1);
  auto rf = train(f, d, c);
  EXPECT_EQ(rf.back().loss_a, 0.0);
  EXPECT_FALSE(rf.back().acc_a.has_value());
  // Without dual-stream training the accumulation head is never touched.
  Network fresh = Network::build(tiny(), 1);
  EXPECT_EQ(f.head_accum.weight.value.to_vector(), fresh.head_accum.weight.value.to_vector());
}

TEST(TrainTest, RecordJsonFields) {
  EpochRecord r;
  r.acc_a = 0.5;
  auto j = r.to_json();
  for (const char* k : {"epoch", "lr", "loss_s", "loss_a", "acc_s", "acc_a", "acc_combined", "seed"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
}

}  // namespace
}  // namespace spikestream
