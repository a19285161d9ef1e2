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

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "pstyle/tensor.hpp"

namespace pstyle {

class Graph;

// Handle to a node recorded in a Graph. Cheap to copy; only valid while the
// owning graph is alive.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// What a node's backward function sees: its output gradient, its inputs'
// forward values, and (nullable) gradient buffers for the inputs that need
// one. Backward functions accumulate with +=.
class BackwardContext {
 public:
  BackwardContext(const Graph& graph, std::size_t node,
                  std::vector<Tensor*> input_grads)
      : graph_(graph), node_(node), input_grads_(std::move(input_grads)) {}

  const Tensor& grad_output() const;
  const Tensor& output() const;
  const Tensor& input(std::size_t i) const;
  Tensor* input_grad(std::size_t i) const { return input_grads_[i]; }

 private:
  const Graph& graph_;
  std::size_t node_;
  std::vector<Tensor*> input_grads_;
};

using BackwardFn = std::function<void(const BackwardContext&)>;

// Define-by-run tape. Nodes are appended in execution order, which is a
// topological order by construction; backward walks it in reverse.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var leaf(Tensor value, bool requires_grad = false);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  // Appends an op node. `backward` may be empty for non-differentiable ops.
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const;
  bool needs_grad(Var v) const;

  // Populates gradients of every requires_grad leaf (zero when the loss does
  // not depend on it). A second call requires reset_grad() first.
  void backward(Var loss);
  void reset_grad();

  // Gradient of a node after backward(); throws if none was computed.
  const Tensor& grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  friend class BackwardContext;

  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    bool needs_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  void check_owned(Var v) const;

  // deque so references returned by value() survive later appends.
  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace pstyle
