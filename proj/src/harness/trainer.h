// Copyright 2026 The Spanground Authors.
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

#ifndef SPANGROUND_HARNESS_TRAINER_H_
#define SPANGROUND_HARNESS_TRAINER_H_

#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "harness/checkpoint.h"
#include "harness/dataset.h"
#include "harness/joint_model.h"
#include "metrics/metrics.h"
#include "objective/objective.h"

namespace spanground {

struct StepRecord {
  long step = 0;
  int epoch = 0;
  double lr = 0.0;
  double qg = 0.0;
  double ed = 0.0;
  double esp = 0.0;
  double omega = 1.0;
  double total = 0.0;
};

// One line of "key=value" pairs, reals printed with 17 significant digits.
std::string FormatStepRecord(const StepRecord& r);
StepRecord ParseStepRecord(std::string_view line);

struct TrainOptions {
  // Checkpoints and the step log go here when nonempty.
  std::string out_dir;
  std::function<void(const StepRecord&)> on_step;
  std::function<void(int epoch, const EvalReport& dev)> on_epoch;
};

struct TrainResult {
  std::vector<StepRecord> log;
  int epochs_run = 0;
  bool early_stopped = false;
  double best_dev_f1 = -1.0;
};

class Trainer {
 public:
  // The model must outlive the trainer.
  explicit Trainer(JointModel& model);

  // Forward, backward and one optimizer update on `batch`. Throws
  // Error(kNumerical) naming the component and step on a non-finite loss.
  StepRecord Step(std::span<const LoadedExample* const> batch);

  TrainResult Train(const Dataset& train, const Dataset* dev,
                    const TrainOptions& options);

  double LearningRate(long step) const;
  long total_steps(size_t train_size) const;

  TrainingState State() const;
  void Restore(const TrainingState& state);

  long step() const { return step_; }
  std::mt19937_64& rng() { return rng_; }

 private:
  JointModel& model_;
  nn::AdamW optimizer_;
  BalanceTracker balance_;
  std::mt19937_64 rng_;
  long step_ = 0;
  int epoch_ = 0;
  long planned_steps_ = 0;
  double best_dev_f1_ = -1.0;
  int epochs_without_improvement_ = 0;
};

// Loss of a fixed batch in eval mode (no dropout, running statistics).
BatchLosses EvalLosses(JointModel& model,
                       std::span<const LoadedExample* const> batch);

struct Evaluation {
  EvalReport report;
  std::vector<InstancePrediction> predictions;
};

Evaluation Evaluate(JointModel& model, const Dataset& data,
                    int batch_size = 8);

// {"id", "type", "spans": [[start, end], ...], "box": [x1, y1, x2, y2],
//  "confidence", "exist_probability"} per line.
std::string FormatPredictions(std::span<const InstancePrediction> predictions);
std::vector<InstancePrediction> ParsePredictions(std::string_view jsonl);

// Draws gold (green) and predicted (red) boxes with type labels and writes
// one PNG per example into out_dir. Returns the written paths.
std::vector<std::string> RenderPredictions(
    const Dataset& data, std::span<const InstancePrediction> predictions,
    const std::string& out_dir);

std::vector<const LoadedExample*> Pointers(const Dataset& data);

}  // namespace spanground

#endif  // SPANGROUND_HARNESS_TRAINER_H_
