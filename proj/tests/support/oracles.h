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

#ifndef CSLAB_TESTS_SUPPORT_ORACLES_H_
#define CSLAB_TESTS_SUPPORT_ORACLES_H_

#include <cstddef>
#include <functional>
#include <string>
#include <tuple>
#include <vector>

#include "cslab/corpus.h"
#include "cslab/ecgen.h"
#include "cslab/nn/tape.h"

namespace cslab::oracle {

// Plain recursion over (i, j) without memoization sharing with the library.
std::size_t edit_distance_recursive(const std::vector<std::string>& a,
                                    const std::vector<std::string>& b);

// log of the sum over all T^L tag paths of exp(score).
double crf_log_z_brute(const nn::Tensor& emissions, const nn::Tensor& transitions);

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// Compares analytic gradients of loss(tape) with respect to params against
// central differences with step h. Relative error uses
// |a - n| / max(|a|, |n|, floor).
GradCheck gradcheck(const std::function<nn::Var(nn::Tape&)>& loss,
                    const nn::ParamList& params, double h = 1e-5,
                    double floor = 1e-4);

// Entity spans (type, begin, end) read off an IOB sequence by the plain
// definition: B-X opens, I-X continues the open X span, anything else
// closes it. An I-X with no open X span opens one.
std::vector<std::tuple<std::string, std::size_t, std::size_t>> entities(
    const std::vector<std::string>& tags);

// Checks that every output token comes verbatim from src outside the
// recorded spans and from tgt inside them, in order.
bool provenance_ok(const Utterance& src, const Utterance& tgt,
                   const Generated& g);

}  // namespace cslab::oracle

#endif  // CSLAB_TESTS_SUPPORT_ORACLES_H_
