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

#ifndef SPANGROUND_HARNESS_JOINT_MODEL_H_
#define SPANGROUND_HARNESS_JOINT_MODEL_H_

#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "encoders/image_encoder.h"
#include "encoders/text_encoder.h"
#include "existence/existence.h"
#include "fusion/fusion.h"
#include "grounding/grounding.h"
#include "harness/dataset.h"
#include "harness/run_config.h"
#include "heads/heads.h"
#include "querybank/querybank.h"

namespace spanground {

struct InstancePrediction {
  std::string example_id;
  EntityType type = EntityType::kPer;
  std::vector<EntitySpan> spans;  // sentence-token indices
  SelectedBox box;
  double exist_probability = 0.0;
};

// Batch means of the three task losses, still attached to the graph.
struct BatchLosses {
  nn::Var qg;
  nn::Var ed;
  nn::Var esp;
  int instances = 0;
};

class JointModel {
 public:
  // Parameters are initialized from config.seed.
  explicit JointModel(const RunConfig& config);

  BatchLosses Losses(std::span<const LoadedExample* const> batch,
                     bool training, std::mt19937_64& rng);
  // Eval-mode forward and decode of all four type queries per example.
  std::vector<InstancePrediction> Predict(
      std::span<const LoadedExample* const> batch);

  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }
  const RunConfig& config() const { return config_; }
  const AnchorSet& anchors() const { return anchors_; }
  QueryBank& query_bank() { return bank_; }
  TextEncoder& text_encoder() { return *text_; }

 private:
  struct Forward;
  Forward RunInstance(const QueryInstance& instance,
                      const ExamplePair& example, const PyramidKeys& keys,
                      const std::vector<nn::Var>& projected, bool training,
                      std::mt19937_64& rng);

  RunConfig config_;
  nn::ParamStore store_;
  QueryBank bank_;
  AnchorSet anchors_;
  std::unique_ptr<TextEncoder> text_;
  std::unique_ptr<ImageEncoder> image_;
  std::unique_ptr<Fusion> fusion_;
  std::unique_ptr<ExistenceInteraction> existence_;
  std::unique_ptr<GroundingHead> grounding_;
  std::unique_ptr<SpanHeads> heads_;
};

}  // namespace spanground

#endif  // SPANGROUND_HARNESS_JOINT_MODEL_H_
