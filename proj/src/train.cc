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

#include <cctype>
#include <cmath>
#include <numbers>
#include <numeric>

namespace spikestream {

Schedule parse_schedule(std::string_view s) {
  std::string u(s);
  for (char& c : u) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (u == "cosine") return Schedule::kCosine;
  if (u == "step") return Schedule::kStep;
  if (u == "constant") return Schedule::kConstant;
  throw std::invalid_argument("unknown schedule '" + std::string(s) + "' (cosine|step|constant)");
}

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (!(lr > 0.0f)) throw std::invalid_argument("train: lr must be > 0");
  if (momentum < 0.0f || momentum >= 1.0f) throw std::invalid_argument("train: momentum must be in [0, 1)");
  if (weight_decay < 0.0f) throw std::invalid_argument("train: weight_decay must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (t_max < 0 || step_size < 1) throw std::invalid_argument("train: bad schedule period");
}

LossParts dual_loss(Tape& tape, const DualLogits& logits, std::span<const int> labels) {
  LossParts out;
  out.spike = softmax_cross_entropy(tape, logits.spike, labels);
  out.total = out.spike;
  if (logits.accumulation) {
    out.accumulation = softmax_cross_entropy(tape, *logits.accumulation, labels);
    out.total = add(tape, out.spike, *out.accumulation);
  }
  return out;
}

Sgd::Sgd(std::vector<Parameter*> params, float momentum, float weight_decay)
    : params_(std::move(params)), momentum_(momentum), weight_decay_(weight_decay) {
  velocity_.reserve(params_.size());
  for (Parameter* p : params_) velocity_.push_back(Tensor::zeros_like(p->value));
}

void Sgd::step(const Gradients& grads, float lr) {
  for (size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    const Tensor* g = grads.find(p);
    Tensor& v = velocity_[i];
    for (int64_t k = 0; k < v.numel(); ++k) {
      float gk = g ? (*g)[k] : 0.0f;
      if (weight_decay_ != 0.0f) gk += weight_decay_ * p.value[k];
      v[k] = momentum_ * v[k] + gk;
      p.value[k] -= lr * v[k];
    }
  }
}

double cosine_lr(int epoch, int t_max, double lr0) {
  if (t_max <= 0) return lr0;
  return lr0 * (1.0 + std::cos(std::numbers::pi * epoch / t_max)) / 2.0;
}

double step_lr(int epoch, int step_size, double gamma, double lr0) {
  return lr0 * std::pow(gamma, epoch / step_size);
}

double scheduled_lr(const TrainConfig& cfg, int epoch) {
  switch (cfg.schedule) {
    case Schedule::kCosine: return cosine_lr(epoch, cfg.t_max > 0 ? cfg.t_max : cfg.epochs, cfg.lr);
    case Schedule::kStep: return step_lr(epoch, cfg.step_size, cfg.step_gamma, cfg.lr);
    case Schedule::kConstant: return cfg.lr;
  }
  return cfg.lr;
}

nlohmann::json EpochRecord::to_json() const {
  return {{"epoch", epoch},     {"lr", lr},       {"loss_s", loss_s},
          {"loss_a", loss_a},   {"acc_s", acc_s}, {"acc_a", acc_a ? nlohmann::json(*acc_a) : nullptr},
          {"acc_combined", acc_combined},         {"seed", seed}};
}

int argmax_row(const Tensor& scores, int64_t row) {
  const int64_t k = scores.dim(1);
  const float* p = scores.ptr() + row * k;
  return static_cast<int>(std::max_element(p, p + k) - p);
}

namespace {

int64_t count_correct(const Tensor& scores, std::span<const int> labels) {
  int64_t n = 0;
  for (int64_t i = 0; i < static_cast<int64_t>(labels.size()); ++i) {
    n += argmax_row(scores, i) == labels[static_cast<size_t>(i)];
  }
  return n;
}

}  // namespace

std::vector<EpochRecord> train(Network& net, const Dataset& data, const TrainConfig& cfg,
                               const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  data.validate();
  if (data.num_classes != net.config().num_classes) {
    throw std::invalid_argument("dataset has " + std::to_string(data.num_classes) +
                                " classes, network expects " +
                                std::to_string(net.config().num_classes));
  }
  if (net.fused()) throw std::logic_error("cannot train a fused network");
  const InferenceMode mode = cfg.dual_stream ? InferenceMode::kDsnn : InferenceMode::kFsnn;
  Sgd opt(net.parameters(), cfg.momentum, cfg.weight_decay);
  Rng rng(cfg.seed);
  std::vector<int64_t> order(static_cast<size_t>(data.size()));
  std::iota(order.begin(), order.end(), 0);
  std::vector<EpochRecord> history;
  const int T = net.config().time_steps;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = scheduled_lr(cfg, epoch);
    rng.shuffle(order);
    double loss_s = 0, loss_a = 0;
    int64_t ok_s = 0, ok_a = 0, ok_c = 0, seen = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      std::span<const int64_t> idx(order.data() + start, end - start);
      Batch batch = make_batch(data, idx, T, cfg.encoder);
      Tape tape;
      ForwardContext ctx{tape, true, nullptr, false};
      DualLogits logits = net.forward(ctx, batch.x, batch.binary, mode);
      LossParts loss = dual_loss(tape, logits, batch.labels);
      const double bn = static_cast<double>(idx.size());
      loss_s += tape.value(loss.spike)[0] * bn;
      if (loss.accumulation) loss_a += tape.value(*loss.accumulation)[0] * bn;
      ok_s += count_correct(tape.value(logits.spike), batch.labels);
      if (logits.accumulation) ok_a += count_correct(tape.value(*logits.accumulation), batch.labels);
      ok_c += count_correct(net.scores(tape, logits), batch.labels);
      seen += static_cast<int64_t>(idx.size());
      Gradients grads = tape.backward(loss.total);
      opt.step(grads, static_cast<float>(lr));
    }
    EpochRecord r;
    r.epoch = epoch;
    r.lr = lr;
    r.seed = cfg.seed;
    const double n = seen > 0 ? static_cast<double>(seen) : 1.0;
    r.loss_s = loss_s / n;
    r.loss_a = loss_a / n;
    r.acc_s = ok_s / n;
    if (cfg.dual_stream) r.acc_a = ok_a / n;
    r.acc_combined = ok_c / n;
    history.push_back(r);
    if (on_epoch) on_epoch(r);
  }
  return history;
}

nlohmann::json EvalResult::to_json() const {
  return {{"samples", samples},
          {"acc_s", acc_s},
          {"acc_a", acc_a ? nlohmann::json(*acc_a) : nullptr},
          {"accuracy", accuracy}};
}

EvalResult evaluate(Network& net, const Dataset& data, InferenceMode mode, int batch_size,
                    const EncoderConfig& enc, OpCount* ops) {
  data.validate();
  if (batch_size < 1) throw std::invalid_argument("evaluate: batch_size must be >= 1");
  EvalResult r;
  int64_t ok_s = 0, ok_a = 0, ok_c = 0;
  const int T = net.config().time_steps;
  std::vector<int64_t> idx;
  for (int64_t start = 0; start < data.size(); start += batch_size) {
    idx.clear();
    for (int64_t i = start; i < std::min(data.size(), start + batch_size); ++i) idx.push_back(i);
    Batch batch = make_batch(data, idx, T, enc);
    Tape tape(false);
    std::optional<OpCounter> counter;
    if (ops) counter.emplace(tape);
    ForwardContext ctx{tape, false, counter ? &*counter : nullptr};
    DualLogits logits = net.forward(ctx, batch.x, batch.binary, mode);
    if (ops) ops->merge(counter->finish(static_cast<int64_t>(idx.size()), T));
    ok_s += count_correct(tape.value(logits.spike), batch.labels);
    if (logits.accumulation) ok_a += count_correct(tape.value(*logits.accumulation), batch.labels);
    ok_c += count_correct(net.scores(tape, logits), batch.labels);
  }
  r.samples = data.size();
  const double n = r.samples > 0 ? static_cast<double>(r.samples) : 1.0;
  r.acc_s = ok_s / n;
  if (mode == InferenceMode::kDsnn) r.acc_a = ok_a / n;
  r.accuracy = ok_c / n;
  return r;
}

}  // namespace spikestream
