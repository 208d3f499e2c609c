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

#ifndef CSLAB_META_H_
#define CSLAB_META_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cslab/corpus.h"
#include "cslab/lm.h"
#include "cslab/nn/tape.h"
#include "cslab/random.h"

// Training-strategy engines over any differentiable model: joint multi-task
// training, first-order MAML, and meta-transfer learning, whose outer loss
// only ever sees target-domain data.
namespace cslab::meta {

struct Sample {
  std::vector<int> tokens;
  std::string domain;  // name of the dataset it came from
};

class MetaModel {
 public:
  virtual ~MetaModel() = default;
  virtual nn::ParamList parameters() = 0;
  virtual nn::Var loss(nn::Tape& tape, std::span<const Sample> batch) = 0;
};

struct Dataset {
  std::string name;
  std::vector<Sample> samples;
};

// Cycles through a dataset in seeded random order, reshuffling whenever it
// runs out.
class BatchSampler {
 public:
  BatchSampler(const Dataset& data, std::uint64_t seed);
  std::vector<Sample> next(std::size_t size);

 private:
  const Dataset* data_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

// Source datasets plus one target dataset. Throws DataError when any dataset
// is empty.
class TaskSet {
 public:
  TaskSet(std::vector<Dataset> sources, Dataset target, std::uint64_t seed);

  std::size_t task_count() const { return sources_.size() + 1; }
  // Task i < source count is a source; the last index is the target.
  const Dataset& task(std::size_t i) const;
  const Dataset& target() const { return target_; }
  std::vector<Sample> batch(std::size_t task, std::size_t size);
  std::vector<Sample> target_batch(std::size_t size) { return batch(task_count() - 1, size); }
  // Uniform task draw.
  std::size_t pick_task() { return rng_.index(task_count()); }

 private:
  std::vector<Dataset> sources_;
  Dataset target_;
  Rng rng_;
  std::vector<BatchSampler> samplers_;
};

enum class Mode { kJoint, kMaml, kMetaTransfer };
std::string_view to_string(Mode m);
Mode parse_mode(std::string_view text);  // joint, maml, meta-transfer

struct MetaConfig {
  double alpha = 0.1;  // inner step size
  double beta = 0.1;   // outer step size; also the joint-training rate
  std::size_t inner_steps = 1;
  std::size_t tasks_per_step = 4;
  std::size_t batch_size = 4;
  Mode mode = Mode::kMetaTransfer;
};

struct TaskBatch {
  std::vector<Sample> train;
  std::vector<Sample> val;
};

struct StepReport {
  std::vector<double> summands;  // per-task losses entering the update
  double loss = 0.0;             // their sum
};

// theta <- theta - beta * grad(sum of one batch per task). Tasks contribute
// with equal weight and equal batch size.
StepReport joint_step(MetaModel& model, TaskSet& tasks, const MetaConfig& config);

// First-order two-level update on explicit batches: for each task,
// theta'_i = theta - alpha * grad L(train_i) (inner_steps times), then
// theta <- theta - beta * sum_i grad L(val_i) evaluated at theta'_i.
// When required_val_domain is non-empty every validation sample must carry
// it, or a ContractError is thrown before anything changes. The summands
// are the validation losses at the adapted parameters.
StepReport meta_update(MetaModel& model, const std::vector<TaskBatch>& batches,
                       const MetaConfig& config, std::string_view required_val_domain = {});

// tasks_per_step training batches drawn from uniformly chosen tasks (sources
// and target); validation batches from the target only.
StepReport meta_transfer_step(MetaModel& model, TaskSet& tasks, const MetaConfig& config);

struct TaskSplit {
  Dataset train;
  Dataset val;
};

// Tasks with their own train/validation splits. Throws ContractError when a
// split is missing (empty).
class SplitTaskSet {
 public:
  SplitTaskSet(std::vector<TaskSplit> splits, std::uint64_t seed);
  std::size_t task_count() const { return splits_.size(); }
  TaskBatch batch(std::size_t task, std::size_t size);
  std::size_t pick_task() { return rng_.index(splits_.size()); }

 private:
  std::vector<TaskSplit> splits_;
  Rng rng_;
  std::vector<BatchSampler> train_;
  std::vector<BatchSampler> val_;
};

// Like meta_transfer_step, but each validation batch comes from the same
// task as its training batch.
StepReport maml_step(MetaModel& model, SplitTaskSet& tasks, const MetaConfig& config);

struct TracePoint {
  std::size_t iteration = 0;
  double train_loss = 0.0;
  double target_val_loss = 0.0;
};

// Runs iterations of the configured mode and evaluates the mean target
// validation loss on eval every eval_every iterations (and at the end).
// For kMaml every task is split in half into train and validation parts.
std::vector<TracePoint> train_meta(MetaModel& model, TaskSet& tasks, const MetaConfig& config,
                                   std::size_t iterations, const std::vector<Sample>& eval,
                                   std::size_t eval_every, std::uint64_t seed);

// Batch losses averaged with batch-size weights; gradients are untouched.
double evaluate(MetaModel& model, const std::vector<Sample>& samples, std::size_t batch = 16);

// Character-level LSTM LM over utterances: every code point of every surface
// plus a space between words, framed by <s> ... </s>.
class CharLmTask : public MetaModel {
 public:
  CharLmTask(const std::vector<const Corpus*>& corpora, std::size_t hidden, std::uint64_t seed);

  Dataset dataset(const Corpus& corpus, const std::string& name) const;
  nn::ParamList parameters() override { return model_.parameters(); }
  // Mean NLL per character over the batch.
  nn::Var loss(nn::Tape& tape, std::span<const Sample> batch) override;
  lm::LanguageModel& model() { return model_; }

 private:
  static std::vector<std::string> chars(const Utterance& u);
  lm::LanguageModel model_;
};

}  // namespace cslab::meta

#endif  // CSLAB_META_H_
