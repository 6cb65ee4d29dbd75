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

#ifndef SPANGROUND_CORE_MODEL_CONFIG_H_
#define SPANGROUND_CORE_MODEL_CONFIG_H_

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace spanground {

// What the updated existence representation attends over.
enum class ExistenceContext { kStartAndEnd, kFused, kStartOnly };

// Width/height prior in the 256 frame.
struct AnchorPrior {
  double width = 0.0;
  double height = 0.0;
  bool operator==(const AnchorPrior&) const = default;
};

// Architecture hyper-parameters. Everything here is part of the checkpoint
// config hash.
struct ModelConfig {
  int hidden = 512;  // d
  int heads = 8;
  double dropout = 0.3;

  std::string encoder = "reference";
  // Reference text encoder.
  int text_hidden = 768;  // d_c
  int text_layers = 2;
  int text_heads = 4;
  int text_vocab_buckets = 8192;
  int max_text_length = 512;
  bool freeze_text = false;

  // Backbone channels for the (8x8, 16x16, 32x32) maps.
  std::array<int, 3> visual_channels = {1024, 512, 256};

  bool share_scale_attention = false;
  ExistenceContext existence_context = ExistenceContext::kStartAndEnd;

  // Nine priors, three per scale, listed coarse scale (8x8) first.
  std::array<AnchorPrior, 9> anchors = {{{96, 128},
                                         {128, 96},
                                         {192, 192},
                                         {32, 48},
                                         {48, 32},
                                         {64, 64},
                                         {8, 8},
                                         {16, 16},
                                         {24, 24}}};

  // Stable textual form used for hashing and logging.
  std::string Describe() const;
  unsigned long long Hash() const;
};

}  // namespace spanground

#endif  // SPANGROUND_CORE_MODEL_CONFIG_H_
