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

#ifndef SPIKESTREAM_TAPE_H_
#define SPIKESTREAM_TAPE_H_

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "spikestream/tensor.h"

namespace spikestream {

// A named trainable tensor. Identity (address) is the gradient key, so
// parameters must not move while a tape refers to them.
struct Parameter {
  std::string name;
  Tensor value;
};

// Handle to a value recorded on a Tape.
struct Var {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Accumulation buffers for the inputs of one node during backward.
class GradSink {
 public:
  bool wants(int slot) const;
  // Zero-initialised on first access; backward functions add into it.
  Tensor& grad(int slot);

 private:
  friend class Tape;
  GradSink(class Tape& tape, const std::vector<int32_t>& inputs) : tape_(tape), inputs_(inputs) {}
  class Tape& tape_;
  const std::vector<int32_t>& inputs_;
};

using BackwardFn = std::function<void(const Tensor& grad_out, GradSink& sink)>;

class Gradients {
 public:
  // Null when no gradient reached `v`.
  const Tensor* find(Var v) const;
  const Tensor* find(const Parameter& p) const;
  // Zero tensor of the right shape when no gradient reached the value.
  Tensor of(Var v) const;
  Tensor of(const Parameter& p) const;

  const std::unordered_map<const Parameter*, Tensor>& params() const { return params_; }

 private:
  friend class Tape;
  std::vector<Tensor> by_id_;
  std::vector<Shape> shapes_;
  std::unordered_map<const Parameter*, Tensor> params_;
  std::unordered_map<const Parameter*, Shape> param_shapes_;
};

// Ordered record of one forward pass. Backward visits nodes in exact reverse
// of recording order and sums gradients across fan-out. A tape supports a
// single backward pass.
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = false);
  // One leaf per parameter per tape; repeated calls return the same Var.
  Var param(Parameter& p);
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  bool grad_enabled() const { return grad_enabled_; }
  size_t size() const { return nodes_.size(); }

  Gradients backward(Var root, const Tensor& seed);
  // Root must hold exactly one element; the seed is 1.
  Gradients backward(Var root);

  // Convolution and linear ops report each execution here so an op counter
  // can prove that it saw every synaptic layer.
  void note_synaptic_op() { ++synaptic_ops_; }
  int64_t synaptic_ops() const { return synaptic_ops_; }

  // Test hook: invoked with the node id each time backward visits a node.
  void set_visit_observer(std::function<void(int32_t)> fn) { observer_ = std::move(fn); }

 private:
  friend class GradSink;
  struct Node {
    Tensor value;
    std::vector<int32_t> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::unordered_map<const Parameter*, int32_t> param_ids_;
  std::function<void(int32_t)> observer_;
  int64_t synaptic_ops_ = 0;
  bool grad_enabled_;
  bool consumed_ = false;
};

}  // namespace spikestream

#endif  // SPIKESTREAM_TAPE_H_
