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

#ifndef CSLAB_NN_OPTIM_H_
#define CSLAB_NN_OPTIM_H_

#include <unordered_map>

#include "cslab/nn/tensor.h"

namespace cslab::nn {

void zero_grad(const ParamList& params);
double grad_norm(const ParamList& params);
// Rescales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(const ParamList& params, double max_norm);

// Frozen parameters are never updated by the optimizers.
class Sgd {
 public:
  explicit Sgd(double lr) : lr_(lr) {}
  void step(const ParamList& params);
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  double lr_;
};

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(const ParamList& params);
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  struct Moments {
    Tensor m;
    Tensor v;
  };
  double lr_, beta1_, beta2_, eps_;
  long steps_ = 0;
  std::unordered_map<const Parameter*, Moments> state_;
};

}  // namespace cslab::nn

#endif  // CSLAB_NN_OPTIM_H_
