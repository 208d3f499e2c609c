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

#include "cslab/nn/optim.h"

#include <cmath>

namespace cslab::nn {

void zero_grad(const ParamList& params) {
  for (Parameter* p : params) p->zero_grad();
}

double grad_norm(const ParamList& params) {
  double s = 0.0;
  for (const Parameter* p : params) {
    if (p->frozen) continue;
    for (double g : p->grad.data()) s += g * g;
  }
  return std::sqrt(s);
}

double clip_grad_norm(const ParamList& params, double max_norm) {
  const double norm = grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const double k = max_norm / norm;
    for (Parameter* p : params) {
      if (p->frozen) continue;
      for (double& g : p->grad.data()) g *= k;
    }
  }
  return norm;
}

void Sgd::step(const ParamList& params) {
  for (Parameter* p : params) {
    if (p->frozen || !p->grad.same_shape(p->value)) continue;
    auto& v = p->value.data();
    const auto& g = p->grad.data();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr_ * g[i];
  }
}

void Adam::step(const ParamList& params) {
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (Parameter* p : params) {
    if (p->frozen || !p->grad.same_shape(p->value)) continue;
    Moments& st = state_[p];
    if (!st.m.same_shape(p->value)) {
      st.m = Tensor(p->value.rows(), p->value.cols());
      st.v = Tensor(p->value.rows(), p->value.cols());
    }
    auto& v = p->value.data();
    const auto& g = p->grad.data();
    for (std::size_t i = 0; i < v.size(); ++i) {
      st.m[i] = beta1_ * st.m[i] + (1.0 - beta1_) * g[i];
      st.v[i] = beta2_ * st.v[i] + (1.0 - beta2_) * g[i] * g[i];
      v[i] -= lr_ * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + eps_);
    }
  }
}

}  // namespace cslab::nn
