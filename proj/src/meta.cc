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

#include "cslab/meta.h"

#include <optional>
#include <set>

#include "cslab/error.h"
#include "cslab/nn/ops.h"
#include "cslab/unicode.h"

namespace cslab::meta {

using nn::Tape;
using nn::Tensor;

BatchSampler::BatchSampler(const Dataset& data, std::uint64_t seed)
    : data_(&data), rng_(seed), order_(data.samples.size()) {
  if (data.samples.empty()) throw DataError("dataset '" + data.name + "' is empty");
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  rng_.shuffle(std::span<std::size_t>(order_));
}

std::vector<Sample> BatchSampler::next(std::size_t size) {
  std::vector<Sample> out;
  out.reserve(size);
  while (out.size() < size) {
    if (pos_ == order_.size()) {
      rng_.shuffle(std::span<std::size_t>(order_));
      pos_ = 0;
    }
    out.push_back(data_->samples[order_[pos_++]]);
  }
  return out;
}

TaskSet::TaskSet(std::vector<Dataset> sources, Dataset target, std::uint64_t seed)
    : sources_(std::move(sources)), target_(std::move(target)), rng_(seed) {
  for (std::size_t i = 0; i < task_count(); ++i) samplers_.emplace_back(task(i), seed + 1 + i);
}

const Dataset& TaskSet::task(std::size_t i) const {
  if (i < sources_.size()) return sources_[i];
  if (i == sources_.size()) return target_;
  throw ContractError("task index " + std::to_string(i) + " out of range");
}

std::vector<Sample> TaskSet::batch(std::size_t task_index, std::size_t size) {
  task(task_index);
  return samplers_[task_index].next(size);
}

SplitTaskSet::SplitTaskSet(std::vector<TaskSplit> splits, std::uint64_t seed)
    : splits_(std::move(splits)), rng_(seed) {
  if (splits_.empty()) throw ContractError("no tasks");
  for (std::size_t i = 0; i < splits_.size(); ++i) {
    const TaskSplit& s = splits_[i];
    if (s.train.samples.empty() || s.val.samples.empty()) {
      throw ContractError("task '" + (s.train.name.empty() ? s.val.name : s.train.name) +
                          "' is missing a train or validation split");
    }
    train_.emplace_back(s.train, seed + 1 + 2 * i);
    val_.emplace_back(s.val, seed + 2 + 2 * i);
  }
}

TaskBatch SplitTaskSet::batch(std::size_t task, std::size_t size) {
  if (task >= splits_.size()) throw ContractError("task index out of range");
  TaskBatch b;
  b.train = train_[task].next(size);
  b.val = val_[task].next(size);
  return b;
}

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::kJoint: return "joint";
    case Mode::kMaml: return "maml";
    case Mode::kMetaTransfer: return "meta-transfer";
  }
  return "?";
}

Mode parse_mode(std::string_view text) {
  for (Mode m : {Mode::kJoint, Mode::kMaml, Mode::kMetaTransfer}) {
    if (to_string(m) == text) return m;
  }
  throw DataError("unknown meta mode '" + std::string(text) + "'");
}

namespace {

void check_config(const MetaConfig& c) {
  if (!(c.alpha >= 0.0) || !(c.beta >= 0.0)) throw ContractError("step sizes must be non-negative");
  if (c.batch_size == 0 || c.tasks_per_step == 0) {
    throw ContractError("batch size and tasks per step must be positive");
  }
}

// Gradient of the batch loss at the current parameters, left in p->grad.
double gradient(MetaModel& model, const nn::ParamList& params, std::span<const Sample> batch) {
  for (nn::Parameter* p : params) p->zero_grad();
  Tape tape;
  nn::Var l = model.loss(tape, batch);
  tape.backward(l);
  return l.item();
}

void sgd(const nn::ParamList& params, double lr) {
  for (nn::Parameter* p : params) {
    if (p->frozen) continue;
    auto& v = p->value.data();
    const auto& g = p->grad.data();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
  }
}

}  // namespace

StepReport joint_step(MetaModel& model, TaskSet& tasks, const MetaConfig& config) {
  check_config(config);
  const nn::ParamList params = model.parameters();
  for (nn::Parameter* p : params) p->zero_grad();
  StepReport r;
  for (std::size_t t = 0; t < tasks.task_count(); ++t) {
    const std::vector<Sample> batch = tasks.batch(t, config.batch_size);
    // Each task's backward adds into the same gradient buffers.
    Tape tape;
    nn::Var l = model.loss(tape, batch);
    tape.backward(l);
    r.summands.push_back(l.item());
    r.loss += l.item();
  }
  sgd(params, config.beta);
  return r;
}

StepReport meta_update(MetaModel& model, const std::vector<TaskBatch>& batches,
                       const MetaConfig& config, std::string_view required_val_domain) {
  check_config(config);
  if (batches.empty()) throw ContractError("meta update without task batches");
  for (const TaskBatch& b : batches) {
    if (b.train.empty() || b.val.empty()) throw ContractError("task batch without train or val part");
    if (required_val_domain.empty()) continue;
    for (const Sample& s : b.val) {
      if (s.domain != required_val_domain) {
        throw ContractError("validation sample from '" + s.domain + "' where only '" +
                            std::string(required_val_domain) + "' is allowed");
      }
    }
  }
  const nn::ParamList params = model.parameters();
  std::vector<Tensor> theta;
  std::vector<Tensor> meta_grad;
  for (nn::Parameter* p : params) {
    theta.push_back(p->value);
    meta_grad.emplace_back(p->value.rows(), p->value.cols());
  }
  StepReport r;
  for (const TaskBatch& b : batches) {
    for (std::size_t k = 0; k < config.inner_steps; ++k) {
      gradient(model, params, b.train);
      sgd(params, config.alpha);
    }
    const double val = gradient(model, params, b.val);
    r.summands.push_back(val);
    r.loss += val;
    for (std::size_t i = 0; i < params.size(); ++i) {
      meta_grad[i] += params[i]->grad;
      params[i]->value = theta[i];
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->grad = meta_grad[i];
  sgd(params, config.beta);
  return r;
}

StepReport meta_transfer_step(MetaModel& model, TaskSet& tasks, const MetaConfig& config) {
  check_config(config);
  std::vector<TaskBatch> batches;
  for (std::size_t i = 0; i < config.tasks_per_step; ++i) {
    TaskBatch b;
    b.train = tasks.batch(tasks.pick_task(), config.batch_size);
    b.val = tasks.target_batch(config.batch_size);
    batches.push_back(std::move(b));
  }
  return meta_update(model, batches, config, tasks.target().name);
}

StepReport maml_step(MetaModel& model, SplitTaskSet& tasks, const MetaConfig& config) {
  check_config(config);
  std::vector<TaskBatch> batches;
  for (std::size_t i = 0; i < config.tasks_per_step; ++i) {
    batches.push_back(tasks.batch(tasks.pick_task(), config.batch_size));
  }
  return meta_update(model, batches, config);
}

double evaluate(MetaModel& model, const std::vector<Sample>& samples, std::size_t batch) {
  if (samples.empty()) throw DataError("nothing to evaluate");
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); i += batch) {
    const std::size_t n = std::min(batch, samples.size() - i);
    Tape tape;
    total += model.loss(tape, std::span<const Sample>(samples).subspan(i, n)).item() *
             static_cast<double>(n);
  }
  return total / static_cast<double>(samples.size());
}

std::vector<TracePoint> train_meta(MetaModel& model, TaskSet& tasks, const MetaConfig& config,
                                   std::size_t iterations, const std::vector<Sample>& eval,
                                   std::size_t eval_every, std::uint64_t seed) {
  std::optional<SplitTaskSet> splits;
  if (config.mode == Mode::kMaml) {
    std::vector<TaskSplit> parts;
    for (std::size_t t = 0; t < tasks.task_count(); ++t) {
      const Dataset& d = tasks.task(t);
      const std::size_t half = d.samples.size() / 2;
      TaskSplit s{{d.name, {d.samples.begin(), d.samples.begin() + static_cast<std::ptrdiff_t>(half)}},
                  {d.name, {d.samples.begin() + static_cast<std::ptrdiff_t>(half), d.samples.end()}}};
      parts.push_back(std::move(s));
    }
    splits.emplace(std::move(parts), seed);
  }
  std::vector<TracePoint> trace;
  for (std::size_t it = 1; it <= iterations; ++it) {
    StepReport r;
    switch (config.mode) {
      case Mode::kJoint: r = joint_step(model, tasks, config); break;
      case Mode::kMaml: r = maml_step(model, *splits, config); break;
      case Mode::kMetaTransfer: r = meta_transfer_step(model, tasks, config); break;
    }
    if (it % eval_every == 0 || it == iterations) {
      trace.push_back({it, r.loss / static_cast<double>(r.summands.size()), evaluate(model, eval)});
    }
  }
  return trace;
}

std::vector<std::string> CharLmTask::chars(const Utterance& u) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < u.tokens.size(); ++i) {
    if (i > 0) out.emplace_back(" ");
    for (const std::string& c : unicode::characters(u.tokens[i].surface)) out.push_back(c);
  }
  return out;
}

namespace {

lm::TokenVocab char_vocab(const std::vector<const Corpus*>& corpora,
                          std::vector<std::string> (*chars)(const Utterance&)) {
  lm::TokenVocab v;
  std::set<std::string> seen;
  for (const Corpus* c : corpora) {
    for (const Utterance& u : c->utterances()) {
      for (std::string& ch : chars(u)) seen.insert(std::move(ch));
    }
  }
  for (const std::string& ch : seen) v.add(ch);
  return v;
}

}  // namespace

CharLmTask::CharLmTask(const std::vector<const Corpus*>& corpora, std::size_t hidden,
                       std::uint64_t seed)
    : model_(char_vocab(corpora, &CharLmTask::chars), lm::TokenVocab(), {.hidden = hidden},
             seed) {}

Dataset CharLmTask::dataset(const Corpus& corpus, const std::string& name) const {
  Dataset d{name, {}};
  for (const Utterance& u : corpus.utterances()) {
    Sample s{{lm::TokenVocab::kBos}, name};
    for (const std::string& c : chars(u)) s.tokens.push_back(model_.words().id(c));
    s.tokens.push_back(lm::TokenVocab::kEos);
    d.samples.push_back(std::move(s));
  }
  return d;
}

nn::Var CharLmTask::loss(Tape& tape, std::span<const Sample> batch) {
  if (batch.empty()) throw ContractError("empty batch");
  std::vector<nn::Var> parts;
  std::size_t tokens = 0;
  for (const Sample& s : batch) {
    lm::Encoded e;
    e.words = s.tokens;
    const auto l = model_.loss(tape, e);
    parts.push_back(l.lm);
    tokens += l.tokens;
  }
  return nn::scale(nn::sum(nn::concat_cols(parts)), 1.0 / static_cast<double>(tokens));
}

}  // namespace cslab::meta
