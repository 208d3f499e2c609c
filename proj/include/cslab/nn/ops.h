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

#ifndef CSLAB_NN_OPS_H_
#define CSLAB_NN_OPS_H_

#include <cstddef>
#include <vector>

#include "cslab/nn/tape.h"
#include "cslab/random.h"

// Differentiable operations on tape variables. Matrices hold one vector per
// row. Shape mismatches throw ContractError.
namespace cslab::nn {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
// a (r x c) plus a 1 x c row broadcast over every row.
Var add_row(Var a, Var row);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
// a times a 1 x 1 variable.
Var scale_by(Var a, Var s);

Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);  // a * b^T
Var transpose(Var a);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var exp(Var a);
Var log(Var a);

// Row-wise. With causal set, entry (i, j) for j > i gets zero probability.
Var softmax(Var a, bool causal = false);
Var log_softmax(Var a);

Var sum(Var a);       // 1 x 1
Var mean(Var a);      // 1 x 1
Var sum_rows(Var a);  // column sums, 1 x c

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var slice_rows(Var a, std::size_t begin, std::size_t end);
Var row(Var a, std::size_t r);
Var pick(Var a, std::size_t r, std::size_t c);  // 1 x 1
Var gather_rows(Var table, const std::vector<std::size_t>& ids);

// Inverted dropout; identity when p == 0.
Var dropout(Var a, double p, Rng& rng);

// Sum over rows of -log softmax(logits)[target].
Var cross_entropy(Var logits, const std::vector<std::size_t>& targets);

}  // namespace cslab::nn

#endif  // CSLAB_NN_OPS_H_
