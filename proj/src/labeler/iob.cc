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

#include "cslab/labeler/iob.h"

#include <algorithm>
#include <map>
#include <set>

#include "cslab/error.h"

namespace cslab::labeler {

namespace {

bool inside(const std::string& t) { return t.size() > 2 && t.compare(0, 2, "I-") == 0; }
bool begin(const std::string& t) { return t.size() > 2 && t.compare(0, 2, "B-") == 0; }
std::string type(const std::string& t) { return t.substr(2); }
// B-X or I-X for the given X.
bool in_span(const std::string& t, const std::string& x) {
  return (inside(t) || begin(t)) && type(t) == x;
}

}  // namespace

Tags iob_repair(const Tags& tags) {
  Tags out = tags;
  const std::size_t n = tags.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& t = out[i];
    const bool next_inside = i + 1 < n && inside(tags[i + 1]);
    if (t == "O" && i > 0 && next_inside && in_span(out[i - 1], type(tags[i + 1]))) {
      out[i] = "I-" + type(tags[i + 1]);
    } else if (begin(t) && next_inside && type(tags[i + 1]) != type(t)) {
      out[i] = "B-" + type(tags[i + 1]);
    } else if (inside(t) && (i == 0 || !in_span(out[i - 1], type(t)))) {
      out[i] = "B-" + type(t);
    }
  }
  return out;
}

Tags ensemble_vote(const std::vector<Tags>& predictions) {
  if (predictions.empty()) throw ContractError("ensemble vote without predictions");
  const std::size_t n = predictions.front().size();
  for (const Tags& p : predictions) {
    if (p.size() != n) throw ContractError("ensemble predictions differ in length");
  }
  Tags out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::map<std::string, std::size_t> votes;
    for (const Tags& p : predictions) ++votes[p[i]];
    std::size_t top = 0;
    for (const auto& [tag, count] : votes) top = std::max(top, count);
    // Model order decides among the tied tags, the first model first.
    for (const Tags& p : predictions) {
      if (votes[p[i]] == top) {
        out[i] = p[i];
        break;
      }
    }
  }
  return iob_repair(out);
}

std::vector<Entity> entities(const Tags& tags) {
  std::vector<Entity> out;
  std::string open;
  std::size_t start = 0;
  auto close = [&](std::size_t end) {
    if (!open.empty()) out.emplace_back(open, start, end);
    open.clear();
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::string& t = tags[i];
    if (begin(t) || (inside(t) && type(t) != open)) {
      close(i);
      open = type(t);
      start = i;
    } else if (!inside(t)) {
      close(i);
    }
  }
  close(tags.size());
  return out;
}

double F1Report::precision() const {
  return pred == 0 ? 0.0 : static_cast<double>(true_pos) / static_cast<double>(pred);
}

double F1Report::recall() const {
  return gold == 0 ? 0.0 : static_cast<double>(true_pos) / static_cast<double>(gold);
}

double F1Report::f1() const {
  const double p = precision();
  const double r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

F1Report entity_f1(const std::vector<Tags>& gold, const std::vector<Tags>& pred) {
  if (gold.size() != pred.size()) throw ContractError("gold and predicted sentence counts differ");
  F1Report r;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != pred[s].size()) {
      throw ContractError("sentence " + std::to_string(s) + ": gold and predicted lengths differ");
    }
    const auto g = entities(gold[s]);
    const auto p = entities(pred[s]);
    const std::set<Entity> gs(g.begin(), g.end());
    for (const Entity& e : p) r.true_pos += gs.contains(e);
    r.pred += p.size();
    r.gold += g.size();
  }
  return r;
}

}  // namespace cslab::labeler
