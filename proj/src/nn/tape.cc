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

#include "cslab/nn/tape.h"

#include "cslab/error.h"

namespace cslab::nn {

const Tensor& Var::value() const { return tape_->nodes_[id_].get(); }

double Var::item() const {
  const Tensor& v = value();
  if (v.size() != 1) throw ContractError("item() on non-scalar " + v.shape_string());
  return v[0];
}

bool Var::requires_grad() const { return tape_->nodes_[id_].requires_grad; }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::leaf(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::param(Parameter& p) {
  if (auto it = params_.find(&p); it != params_.end()) return Var(this, it->second);
  Node n;
  n.ref = &p.value;
  n.requires_grad = !p.frozen;
  n.param = p.frozen ? nullptr : &p;
  Var v = push(std::move(n));
  params_.emplace(&p, v.id_);
  return v;
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents,
                 Backward backward) {
  return record(std::move(value), std::vector<Var>(parents), std::move(backward));
}

Var Tape::record(Tensor value, const std::vector<Var>& parents,
                 Backward backward) {
  Node n;
  n.value = std::move(value);
  for (const Var& p : parents) {
    if (p.tape_ != this) throw ContractError("op mixes variables from different tapes");
    n.requires_grad = n.requires_grad || nodes_[p.id_].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

Tensor& Tape::grad_buffer(Var v) {
  Node& n = nodes_[v.id_];
  if (n.grad.empty() && !n.get().empty()) {
    n.grad = Tensor(n.get().rows(), n.get().cols());
  }
  return n.grad;
}

void Tape::accumulate(Var v, const Tensor& g) {
  if (!nodes_[v.id_].requires_grad) return;
  grad_buffer(v) += g;
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw ContractError("backward on a foreign variable");
  const Tensor& lv = nodes_[loss.id_].get();
  if (lv.size() != 1) {
    throw ContractError("backward needs a scalar loss, got " + lv.shape_string());
  }
  for (Node& n : nodes_) n.grad = Tensor();
  if (!nodes_[loss.id_].requires_grad) return;
  grad_buffer(loss)[0] = 1.0;
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty()) continue;
    if (n.backward) n.backward(n.grad);
    if (n.param) {
      if (!n.param->grad.same_shape(n.grad)) n.param->zero_grad();
      n.param->grad += n.grad;
    }
  }
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.id_];
  if (n.grad.empty()) return Tensor(n.get().rows(), n.get().cols());
  return n.grad;
}

}  // namespace cslab::nn
