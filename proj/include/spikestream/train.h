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

#ifndef SPIKESTREAM_TRAIN_H_
#define SPIKESTREAM_TRAIN_H_

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "spikestream/data.h"
#include "spikestream/network.h"
#include "spikestream/syops.h"

namespace spikestream {

enum class Schedule { kCosine, kStep, kConstant };
Schedule parse_schedule(std::string_view s);

struct TrainConfig {
  int epochs = 10;
  float lr = 0.1f;
  float momentum = 0.9f;
  float weight_decay = 0.0f;
  Schedule schedule = Schedule::kCosine;
  int t_max = 0;  // cosine period in epochs; 0 means `epochs`
  int step_size = 30;
  float step_gamma = 0.1f;
  int batch_size = 32;
  uint64_t seed = 0;
  // Dual-stream training: add the accumulation-head loss. When off the
  // network trains in FSNN mode and the accumulation pathway never runs.
  bool dual_stream = true;
  EncoderConfig encoder;

  void validate() const;
};

struct LossParts {
  Var total;
  Var spike;
  std::optional<Var> accumulation;
};

// CE(logits_s, y) + CE(logits_a, y); spike term only in FSNN mode.
LossParts dual_loss(Tape& tape, const DualLogits& logits, std::span<const int> labels);

// v <- momentum * v + (g + weight_decay * theta); theta <- theta - lr * v.
class Sgd {
 public:
  Sgd(std::vector<Parameter*> params, float momentum, float weight_decay = 0.0f);
  void step(const Gradients& grads, float lr);
  const std::vector<Tensor>& velocity() const { return velocity_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> velocity_;
  float momentum_;
  float weight_decay_;
};

double cosine_lr(int epoch, int t_max, double lr0);
double step_lr(int epoch, int step_size, double gamma, double lr0);
double scheduled_lr(const TrainConfig& cfg, int epoch);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double loss_s = 0.0;
  double loss_a = 0.0;  // 0 when the accumulation head is not trained
  double acc_s = 0.0;
  std::optional<double> acc_a;
  double acc_combined = 0.0;
  uint64_t seed = 0;

  nlohmann::json to_json() const;
};

// Accuracies over one pass in training mode (running statistics, so they are
// measured while the parameters change).
std::vector<EpochRecord> train(Network& net, const Dataset& data, const TrainConfig& cfg,
                               const std::function<void(const EpochRecord&)>& on_epoch = {});

struct EvalResult {
  int64_t samples = 0;
  double acc_s = 0.0;
  std::optional<double> acc_a;
  double accuracy = 0.0;  // prediction under the configured readout
  nlohmann::json to_json() const;
};

// When `ops` is given, every batch runs under an OpCounter and the counts are
// summed into it.
EvalResult evaluate(Network& net, const Dataset& data, InferenceMode mode, int batch_size = 64,
                    const EncoderConfig& enc = {}, OpCount* ops = nullptr);

int argmax_row(const Tensor& scores, int64_t row);

}  // namespace spikestream

#endif  // SPIKESTREAM_TRAIN_H_
