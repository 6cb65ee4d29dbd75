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

#ifndef SPANGROUND_HARNESS_CHECKPOINT_H_
#define SPANGROUND_HARNESS_CHECKPOINT_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "harness/joint_model.h"
#include "harness/run_config.h"

namespace spanground {

inline constexpr char kCheckpointMagic[8] = {'S', 'P', 'G', 'C',
                                             'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Optimizer and sampling state; absent from inference-only checkpoints.
struct TrainingState {
  long step = 0;
  int epoch = 0;
  long adam_step = 0;
  std::vector<nn::Matrix> first_moments;
  std::vector<nn::Matrix> second_moments;
  std::string rng_state;
  double omega = 1.0;
  long omega_fallbacks = 0;
  double best_dev_f1 = -1.0;
  int epochs_without_improvement = 0;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  unsigned long long config_hash = 0;
  RunConfig config;
  std::vector<std::pair<std::string, nn::Matrix>> params;
  std::map<std::string, nn::BatchNormStats> buffers;
  std::optional<TrainingState> training;
};

Checkpoint CaptureCheckpoint(const JointModel& model,
                             const TrainingState* training);
void WriteCheckpoint(const std::string& path, const Checkpoint& checkpoint);
// Throws Error(kDataError) on a bad magic, version or truncated file.
Checkpoint ReadCheckpoint(const std::string& path);

// Rebuilds the model and copies every tensor. When `encoder` is given and
// differs from the checkpoint's, the config hashes disagree and this throws
// Error(kMismatch).
std::unique_ptr<JointModel> RestoreModel(
    const Checkpoint& checkpoint,
    const std::optional<std::string>& encoder = std::nullopt);

}  // namespace spanground

#endif  // SPANGROUND_HARNESS_CHECKPOINT_H_
