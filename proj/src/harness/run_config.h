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

#ifndef SPANGROUND_HARNESS_RUN_CONFIG_H_
#define SPANGROUND_HARNESS_RUN_CONFIG_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/model_config.h"
#include "heads/heads.h"
#include "objective/objective.h"
#include "querybank/querybank.h"

namespace spanground {

struct RunConfig {
  ModelConfig model;

  double learning_rate = 5e-5;
  double weight_decay = 0.01;
  double warmup_fraction = 0.1;
  int batch_size = 8;
  int epochs = 20;
  int max_steps = 0;  // 0 trains for `epochs` full passes
  int patience = 5;
  int checkpoint_every = 1;  // epochs
  unsigned long long seed = 1;

  LossWeights loss;
  std::optional<double> omega_override;

  QueryStrategy query_strategy = QueryStrategy::kKeywordAnnotation;
  DecodeOptions decode;
  bool require_boxes = false;

  // Grid-search intervals for the two tuned hyperparameters.
  double grid_lr_min = 1e-5;
  double grid_lr_max = 1e-4;
  double grid_dropout_min = 0.1;
  double grid_dropout_max = 0.6;

  // Throws Error(kInvalidArgument) naming the offending key.
  void Validate() const;

  // Flat "key = value" text; Parse accepts what Format writes, '#' comments
  // and any subset of keys.
  std::string Format() const;
  static RunConfig Parse(std::string_view text, const std::string& origin);
  static RunConfig Load(const std::string& path);
  void Set(const std::string& key, const std::string& value);
};

struct GridPoint {
  double learning_rate = 0.0;
  double dropout = 0.0;
};

// Log-spaced learning rates times linearly spaced dropout rates, endpoints
// included.
std::vector<GridPoint> GridSearchPoints(const RunConfig& config,
                                        int lr_points, int dropout_points);

}  // namespace spanground

#endif  // SPANGROUND_HARNESS_RUN_CONFIG_H_
