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

#include "spikestream/tape.h"

namespace spikestream {

bool GradSink::wants(int slot) const {
  return tape_.nodes_[static_cast<size_t>(inputs_[static_cast<size_t>(slot)])].requires_grad;
}

Tensor& GradSink::grad(int slot) {
  const int32_t id = inputs_[static_cast<size_t>(slot)];
  Tensor& g = tape_.grads_[static_cast<size_t>(id)];
  if (g.shape() != tape_.nodes_[static_cast<size_t>(id)].value.shape() || g.empty()) {
    g = Tensor::zeros_like(tape_.nodes_[static_cast<size_t>(id)].value);
  }
  return g;
}

const Tensor* Gradients::find(Var v) const {
  if (!v.valid() || static_cast<size_t>(v.id) >= by_id_.size()) return nullptr;
  const Tensor& g = by_id_[static_cast<size_t>(v.id)];
  return g.shape().empty() && g.empty() ? nullptr : &g;
}

const Tensor* Gradients::find(const Parameter& p) const {
  auto it = params_.find(&p);
  return it == params_.end() ? nullptr : &it->second;
}

Tensor Gradients::of(Var v) const {
  if (const Tensor* g = find(v)) return *g;
  if (!v.valid() || static_cast<size_t>(v.id) >= shapes_.size()) {
    throw TapeError("gradient requested for a value not on this tape");
  }
  return Tensor::zeros(shapes_[static_cast<size_t>(v.id)]);
}

Tensor Gradients::of(const Parameter& p) const {
  if (const Tensor* g = find(p)) return *g;
  auto it = param_shapes_.find(&p);
  return Tensor::zeros(it != param_shapes_.end() ? it->second : p.value.shape());
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad && grad_enabled_;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

Var Tape::param(Parameter& p) {
  auto it = param_ids_.find(&p);
  if (it != param_ids_.end()) return Var{it->second};
  Var v = leaf(p.value, true);
  nodes_[static_cast<size_t>(v.id)].param = &p;
  param_ids_.emplace(&p, v.id);
  return v;
}

Var Tape::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  if (consumed_) throw TapeError("cannot record on a tape after backward");
  Node n;
  n.value = std::move(value);
  for (Var in : inputs) {
    if (!in.valid() || static_cast<size_t>(in.id) >= nodes_.size()) {
      throw TapeError("op input is not recorded on this tape");
    }
    n.requires_grad = n.requires_grad || nodes_[static_cast<size_t>(in.id)].requires_grad;
  }
  if (n.requires_grad && grad_enabled_) {
    n.inputs.reserve(inputs.size());
    for (Var in : inputs) n.inputs.push_back(in.id);
    n.backward = std::move(backward);
  } else {
    n.requires_grad = false;
  }
  nodes_.push_back(std::move(n));
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || static_cast<size_t>(v.id) >= nodes_.size()) {
    throw TapeError("value is not recorded on this tape");
  }
  return nodes_[static_cast<size_t>(v.id)];
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

Gradients Tape::backward(Var root) {
  const Tensor& r = value(root);
  if (r.numel() != 1) {
    throw TapeError("implicit backward needs a single-element root, got " + shape_str(r.shape()));
  }
  return backward(root, Tensor::full(r.shape(), 1.0f));
}

Gradients Tape::backward(Var root, const Tensor& seed) {
  if (nodes_.empty()) throw TapeError("backward called before any forward op was recorded");
  if (consumed_) throw TapeError("backward already ran on this tape");
  if (!grad_enabled_) throw TapeError("backward on a tape recorded with gradients disabled");
  const Node& rn = node(root);
  require_same_shape(rn.value, seed, "backward seed");
  consumed_ = true;

  grads_.assign(nodes_.size(), Tensor());
  grads_[static_cast<size_t>(root.id)] = seed;
  for (int32_t id = root.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    Tensor& g = grads_[static_cast<size_t>(id)];
    if (g.empty() && g.shape().empty()) continue;
    if (observer_) observer_(id);
    if (n.backward) {
      GradSink sink(*this, n.inputs);
      n.backward(g, sink);
    }
  }

  Gradients out;
  out.shapes_.reserve(nodes_.size());
  for (const Node& n : nodes_) out.shapes_.push_back(n.value.shape());
  for (size_t id = 0; id < nodes_.size(); ++id) {
    Node& n = nodes_[id];
    if (n.param != nullptr) {
      out.param_shapes_.emplace(n.param, n.value.shape());
      if (!grads_[id].empty() || !grads_[id].shape().empty()) {
        out.params_.emplace(n.param, grads_[id]);
      }
    }
  }
  out.by_id_ = std::move(grads_);
  grads_.clear();
  return out;
}

}  // namespace spikestream
