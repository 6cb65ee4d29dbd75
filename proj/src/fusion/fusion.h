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

#ifndef SPANGROUND_FUSION_FUSION_H_
#define SPANGROUND_FUSION_FUSION_H_

#include <array>
#include <random>
#include <string>

#include "core/model_config.h"
#include "encoders/image_encoder.h"
#include "nn/layers.h"

namespace spanground {

// softmax(MLP(rows)) weighted row sum. The MLP is d -> d/2 (tanh) -> 1.
class AttentionSummary {
 public:
  struct Result {
    nn::Var summary;          // 1 x d
    Eigen::RowVectorXd weights;  // one weight per input row
  };

  AttentionSummary() = default;
  AttentionSummary(nn::ParamStore& store, const std::string& name, int dim,
                   std::mt19937_64& rng);

  // Throws Error(kInvalidArgument) when `rows` is empty.
  Result Forward(const nn::Var& rows) const;

  const nn::Linear& hidden() const { return hidden_; }
  const nn::Linear& score() const { return score_; }

 private:
  nn::Linear hidden_;
  nn::Linear score_;
};

struct FusedState {
  nn::Var q;    // 1 x d summarized query
  nn::Var h_u;  // c x d visually fused tokens
  nn::Var h_g;  // 1 x d initial existence summary
  Eigen::RowVectorXd query_weights;
  Eigen::RowVectorXd existence_weights;
};

using PyramidKeys = std::array<nn::ProjectedKeys, 3>;

// Multi-scale cross-modality interaction.
class Fusion {
 public:
  Fusion(nn::ParamStore& store, const ModelConfig& config,
         std::mt19937_64& rng);

  AttentionSummary::Result SummarizeQuery(const nn::Var& query_rows) const;
  AttentionSummary::Result SummarizeExistence(const nn::Var& h_prime) const;

  // Key/value projections depend only on the image, so they are computed
  // once per image and shared by its queries.
  PyramidKeys ProjectPyramid(const VisualPyramid& pyramid) const;

  // H_i = Attention(H', U_i) per scale, H_a = mean_i H_i,
  // H_u = FFN([H_a ; H']).
  nn::Var CrossModalFuse(const nn::Var& h_prime, const PyramidKeys& keys,
                         std::array<std::vector<nn::Matrix>, 3>* weights =
                             nullptr) const;
  nn::Var CrossModalFuse(const nn::Var& h_prime,
                         const VisualPyramid& pyramid) const {
    return CrossModalFuse(h_prime, ProjectPyramid(pyramid));
  }

  // Query rows are H' positions [query_begin, query_begin + query_length).
  FusedState Forward(const nn::Var& h_prime, int query_begin, int query_length,
                     const PyramidKeys& keys) const;

  const nn::MultiHeadAttention& scale_attention(int i) const {
    return attention_[share_ ? 0 : i];
  }
  const nn::Linear& ffn_hidden() const { return ffn_hidden_; }
  const nn::Linear& ffn_out() const { return ffn_out_; }

 private:
  bool share_;
  AttentionSummary query_summary_;
  AttentionSummary existence_summary_;
  std::array<nn::MultiHeadAttention, 3> attention_;
  nn::Linear ffn_hidden_;  // 2d -> d, ReLU
  nn::Linear ffn_out_;     // d -> d
};

}  // namespace spanground

#endif  // SPANGROUND_FUSION_FUSION_H_
