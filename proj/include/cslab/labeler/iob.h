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

#ifndef CSLAB_LABELER_IOB_H_
#define CSLAB_LABELER_IOB_H_

#include <cstddef>
#include <string>
#include <tuple>
#include <vector>

namespace cslab::labeler {

using Tags = std::vector<std::string>;

// One left-to-right pass:
//   1. O between B-X/I-X and I-X becomes I-X;
//   2. B-Y directly followed by I-X (Y != X) becomes B-X;
//   3. an I-X without a B-X/I-X predecessor becomes B-X.
// The result never holds an orphan I-X, so a second pass changes nothing.
Tags iob_repair(const Tags& tags);

// Per-position majority vote, then iob_repair. Ties go to the first model's
// tag when it is among the tied ones, otherwise to the tied tag proposed
// earliest in model order. Throws ContractError without predictions or on
// unequal lengths.
Tags ensemble_vote(const std::vector<Tags>& predictions);

// (type, begin, end) spans; an I-X that does not continue an X span opens
// one.
using Entity = std::tuple<std::string, std::size_t, std::size_t>;
std::vector<Entity> entities(const Tags& tags);

struct F1Report {
  std::size_t true_pos = 0;
  std::size_t pred = 0;
  std::size_t gold = 0;
  double precision() const;
  double recall() const;
  double f1() const;  // harmonic mean; 0 when undefined
};

// Micro-averaged over all entities of all sentences.
F1Report entity_f1(const std::vector<Tags>& gold, const std::vector<Tags>& pred);

}  // namespace cslab::labeler

#endif  // CSLAB_LABELER_IOB_H_
