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

#ifndef CSLAB_NN_CRF_H_
#define CSLAB_NN_CRF_H_

#include <cstddef>
#include <vector>

#include "cslab/nn/tape.h"

// Linear-chain CRF over emissions (L x T) and transitions (T x T), where
// transitions(i, j) scores tag i followed by tag j.
namespace cslab::nn {

double crf_score(const Tensor& emissions, const Tensor& transitions,
                 const std::vector<std::size_t>& tags);
double crf_log_partition(const Tensor& emissions, const Tensor& transitions);

// log Z - score(tags). Throws ContractError for a tag >= T or a length
// mismatch.
Var crf_nll(Var emissions, Var transitions, const std::vector<std::size_t>& tags);

// Highest-scoring tag sequence; ties go to the lowest tag index.
std::vector<std::size_t> crf_viterbi(const Tensor& emissions,
                                     const Tensor& transitions);

}  // namespace cslab::nn

#endif  // CSLAB_NN_CRF_H_
