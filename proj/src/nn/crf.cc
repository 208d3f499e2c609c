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

#include "cslab/nn/crf.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cslab/error.h"

namespace cslab::nn {

namespace {

void check_shapes(const Tensor& e, const Tensor& tr) {
  if (e.rows() == 0 || e.cols() == 0) throw ContractError("crf: empty emissions");
  if (tr.rows() != e.cols() || tr.cols() != e.cols()) {
    throw ContractError("crf: transitions " + tr.shape_string() +
                        " do not match emissions " + e.shape_string());
  }
}

void check_tags(const Tensor& e, const std::vector<std::size_t>& tags) {
  if (tags.size() != e.rows()) {
    throw ContractError("crf: " + std::to_string(tags.size()) + " tags for " +
                        std::to_string(e.rows()) + " positions");
  }
  for (std::size_t t : tags) {
    if (t >= e.cols()) {
      throw ContractError("crf: tag " + std::to_string(t) + " out of range for " +
                          std::to_string(e.cols()) + " tags");
    }
  }
}

double log_sum_exp(const std::vector<double>& xs) {
  const double mx = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s);
}

// alpha(t, j): log-sum of prefix scores ending in tag j at position t.
Tensor forward_table(const Tensor& e, const Tensor& tr) {
  const std::size_t len = e.rows();
  const std::size_t n = e.cols();
  Tensor alpha(len, n);
  for (std::size_t j = 0; j < n; ++j) alpha(0, j) = e(0, j);
  std::vector<double> terms(n);
  for (std::size_t t = 1; t < len; ++t) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) terms[i] = alpha(t - 1, i) + tr(i, j);
      alpha(t, j) = log_sum_exp(terms) + e(t, j);
    }
  }
  return alpha;
}

// beta(t, i): log-sum of suffix scores after position t given tag i there.
Tensor backward_table(const Tensor& e, const Tensor& tr) {
  const std::size_t len = e.rows();
  const std::size_t n = e.cols();
  Tensor beta(len, n);
  std::vector<double> terms(n);
  for (std::size_t t = len - 1; t-- > 0;) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) terms[j] = tr(i, j) + e(t + 1, j) + beta(t + 1, j);
      beta(t, i) = log_sum_exp(terms);
    }
  }
  return beta;
}

double log_z_from(const Tensor& alpha) {
  const std::size_t last = alpha.rows() - 1;
  auto r = alpha.row_span(last);
  return log_sum_exp(std::vector<double>(r.begin(), r.end()));
}

}  // namespace

double crf_score(const Tensor& emissions, const Tensor& transitions,
                 const std::vector<std::size_t>& tags) {
  check_shapes(emissions, transitions);
  check_tags(emissions, tags);
  double s = 0.0;
  for (std::size_t t = 0; t < tags.size(); ++t) {
    s += emissions(t, tags[t]);
    if (t > 0) s += transitions(tags[t - 1], tags[t]);
  }
  return s;
}

double crf_log_partition(const Tensor& emissions, const Tensor& transitions) {
  check_shapes(emissions, transitions);
  return log_z_from(forward_table(emissions, transitions));
}

Var crf_nll(Var emissions, Var transitions, const std::vector<std::size_t>& tags) {
  const Tensor& e = emissions.value();
  const Tensor& tr = transitions.value();
  check_shapes(e, tr);
  check_tags(e, tags);
  const double log_z = crf_log_partition(e, tr);
  const double nll = log_z - crf_score(e, tr, tags);
  Tape* tape = emissions.tape();
  return tape->record(
      Tensor::scalar(nll), {emissions, transitions},
      [tape, emissions, transitions, tags, log_z](const Tensor& g) {
        const Tensor& e = emissions.value();
        const Tensor& tr = transitions.value();
        const std::size_t len = e.rows();
        const std::size_t n = e.cols();
        const Tensor alpha = forward_table(e, tr);
        const Tensor beta = backward_table(e, tr);
        Tensor ge(len, n);
        Tensor gt(n, n);
        for (std::size_t t = 0; t < len; ++t) {
          for (std::size_t j = 0; j < n; ++j) {
            ge(t, j) = std::exp(alpha(t, j) + beta(t, j) - log_z);
          }
          ge(t, tags[t]) -= 1.0;
        }
        for (std::size_t t = 1; t < len; ++t) {
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
              gt(i, j) += std::exp(alpha(t - 1, i) + tr(i, j) + e(t, j) +
                                   beta(t, j) - log_z);
            }
          }
          gt(tags[t - 1], tags[t]) -= 1.0;
        }
        for (double& v : ge.data()) v *= g[0];
        for (double& v : gt.data()) v *= g[0];
        tape->accumulate(emissions, ge);
        tape->accumulate(transitions, gt);
      });
}

std::vector<std::size_t> crf_viterbi(const Tensor& emissions,
                                     const Tensor& transitions) {
  check_shapes(emissions, transitions);
  const std::size_t len = emissions.rows();
  const std::size_t n = emissions.cols();
  Tensor best(len, n);
  std::vector<std::size_t> back(len * n, 0);
  for (std::size_t j = 0; j < n; ++j) best(0, j) = emissions(0, j);
  for (std::size_t t = 1; t < len; ++t) {
    for (std::size_t j = 0; j < n; ++j) {
      double top = -std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double s = best(t - 1, i) + transitions(i, j);
        if (s > top) {
          top = s;
          arg = i;
        }
      }
      best(t, j) = top + emissions(t, j);
      back[t * n + j] = arg;
    }
  }
  std::vector<std::size_t> path(len);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    if (best(len - 1, j) > top) {
      top = best(len - 1, j);
      path[len - 1] = j;
    }
  }
  for (std::size_t t = len - 1; t > 0; --t) path[t - 1] = back[t * n + path[t]];
  return path;
}

}  // namespace cslab::nn
