// Copyright 2026 The cs-lab Authors.
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

#ifndef CSLAB_NN_TAPE_H_
#define CSLAB_NN_TAPE_H_

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <unordered_map>
#include <vector>

#include "cslab/nn/tensor.h"

namespace cslab::nn {

class Tape;

// Handle to a node recorded on a tape. Cheap to copy; valid while the tape
// lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double item() const;
  bool requires_grad() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode recorder. Nodes are appended in evaluation order, which is a
// topological order, and the backward pass walks them in reverse.
class Tape {
 public:
  // Receives the gradient of the loss with respect to the node's value.
  using Backward = std::function<void(const Tensor& grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Differentiable input that is not a parameter; its gradient is read with
  // grad().
  Var leaf(Tensor value);
  // One node per parameter per tape, so shared parameters accumulate.
  // Frozen parameters become constants.
  Var param(Parameter& p);

  // Records an op result. The backward closure runs only when the node is
  // reached and some parent requires a gradient.
  Var record(Tensor value, std::initializer_list<Var> parents, Backward backward);
  Var record(Tensor value, const std::vector<Var>& parents, Backward backward);

  // Adds g to the gradient of v, if v requires one.
  void accumulate(Var v, const Tensor& g);
  // Mutable gradient buffer for v, allocated on first use. Only valid for
  // nodes that require a gradient.
  Tensor& grad_buffer(Var v);

  // Seeds d loss / d loss = 1 and propagates. Parameter gradients are added
  // into Parameter::grad. Throws ContractError for a non-scalar loss.
  void backward(Var loss);

  // Gradient of the last backward pass; zeros when unreachable.
  Tensor grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Var;
  struct Node {
    Tensor value;
    const Tensor* ref = nullptr;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
    Parameter* param = nullptr;
    const Tensor& get() const { return ref ? *ref : value; }
  };
  Var push(Node node);

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> params_;
};

}  // namespace cslab::nn

#endif  // CSLAB_NN_TAPE_H_
