// Copyright 2026 The pstyle Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pstyle/autodiff.hpp"

#include <string>

#include "pstyle/error.hpp"

namespace pstyle {

const Tensor& Var::value() const { return graph_->value(*this); }

const Tensor& BackwardContext::grad_output() const {
  return graph_.nodes_[node_].grad;
}

const Tensor& BackwardContext::output() const {
  return graph_.nodes_[node_].value;
}

const Tensor& BackwardContext::input(std::size_t i) const {
  return graph_.nodes_[graph_.nodes_[node_].inputs[i]].value;
}

void Graph::check_owned(Var v) const {
  if (!v.valid() || &v.graph() != this || v.id() >= nodes_.size()) {
    throw GraphError("variable does not belong to this graph");
  }
}

Var Graph::leaf(Tensor value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  node.needs_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (const Var& in : inputs) {
    check_owned(in);
    node.inputs.push_back(in.id());
    node.needs_grad = node.needs_grad || nodes_[in.id()].needs_grad;
  }
  if (node.needs_grad) node.backward = std::move(backward);
#ifndef NDEBUG
  if (!node.value.all_finite()) {
    bool inputs_finite = true;
    for (std::size_t in : node.inputs) {
      inputs_finite = inputs_finite && nodes_[in].value.all_finite();
    }
    if (inputs_finite) {
      throw NumericError("op produced non-finite values from finite inputs");
    }
  }
#endif
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Graph::value(Var v) const {
  check_owned(v);
  return nodes_[v.id()].value;
}

bool Graph::needs_grad(Var v) const {
  check_owned(v);
  return nodes_[v.id()].needs_grad;
}

void Graph::backward(Var loss) {
  check_owned(loss);
  if (backward_done_) {
    throw GraphError("backward already ran on this graph; call reset_grad()");
  }
  const Tensor& lv = nodes_[loss.id()].value;
  if (lv.numel() != 1) {
    throw GraphError("backward needs a scalar loss, got shape " +
                     shape_str(lv.shape()));
  }
  backward_done_ = true;

  for (Node& node : nodes_) {
    if (node.requires_grad) {
      node.grad = Tensor(node.value.shape());
      node.has_grad = true;
    }
  }
  Node& root = nodes_[loss.id()];
  root.grad = Tensor(root.value.shape(), 1.0);
  root.has_grad = true;

  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.has_grad || !node.backward) continue;
    std::vector<Tensor*> input_grads;
    input_grads.reserve(node.inputs.size());
    for (std::size_t in : node.inputs) {
      Node& src = nodes_[in];
      if (!src.needs_grad) {
        input_grads.push_back(nullptr);
        continue;
      }
      if (!src.has_grad) {
        src.grad = Tensor(src.value.shape());
        src.has_grad = true;
      }
      input_grads.push_back(&src.grad);
    }
    node.backward(BackwardContext(*this, id, std::move(input_grads)));
  }
}

void Graph::reset_grad() {
  for (Node& node : nodes_) {
    node.grad = Tensor();
    node.has_grad = false;
  }
  backward_done_ = false;
}

const Tensor& Graph::grad(Var v) const {
  check_owned(v);
  const Node& node = nodes_[v.id()];
  if (!node.has_grad) {
    throw GraphError("no gradient recorded for node " + std::to_string(v.id()));
  }
  return node.grad;
}

}  // namespace pstyle
