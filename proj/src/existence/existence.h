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

#ifndef SPANGROUND_EXISTENCE_EXISTENCE_H_
#define SPANGROUND_EXISTENCE_EXISTENCE_H_

#include <random>
#include <string>
#include <vector>

#include "core/model_config.h"
#include "nn/layers.h"

namespace spanground {

// Multi-head attention of rows over a binary label embedding table, then
// W_l [H^l ; rows] back to d columns.
class LabelAttention {
 public:
  LabelAttention() = default;
  LabelAttention(nn::ParamStore& store, const std::string& name, int dim,
                 int heads, std::mt19937_64& rng);

  nn::Var Forward(const nn::Var& rows,
                  std::vector<nn::Matrix>* weights = nullptr) const;
  // Only H^l, before the output projection.
  nn::Var LabelContext(const nn::Var& rows,
                       std::vector<nn::Matrix>* weights = nullptr) const;

  const nn::Var& labels() const { return labels_; }  // 2 x d
  const nn::MultiHeadAttention& attention() const { return attention_; }
  const nn::Var& output() const { return output_; }  // 2d x d

 private:
  nn::Var labels_;
  nn::MultiHeadAttention attention_;
  nn::Var output_;
};

// LN(rows + Attention(rows, context)). With a single context row the softmax
// is identically 1 and the update is the projected context broadcast.
class ResidualAttention {
 public:
  ResidualAttention() = default;
  ResidualAttention(nn::ParamStore& store, const std::string& name, int dim,
                    int heads, std::mt19937_64& rng);

  nn::Var Forward(const nn::Var& rows, const nn::Var& context,
                  std::vector<nn::Matrix>* weights = nullptr) const;

  const nn::MultiHeadAttention& attention() const { return attention_; }
  const nn::LayerNorm& norm() const { return norm_; }

 private:
  nn::MultiHeadAttention attention_;
  nn::LayerNorm norm_;
};

struct InteractionState {
  nn::Var h_s;        // c x d start label-enhanced
  nn::Var h_e;        // c x d end label-enhanced
  nn::Var h_hat_g;    // 1 x d existence label-enhanced
  nn::Var h_tilde_s;  // c x d existence-aware start
  nn::Var h_tilde_e;  // c x d existence-aware end
  nn::Var h_tilde_g;  // 1 x d updated existence
};

// Existence-aware uni-modality interaction.
class ExistenceInteraction {
 public:
  ExistenceInteraction(nn::ParamStore& store, const ModelConfig& config,
                       std::mt19937_64& rng);

  // H~_x = LN(H_x + Attention(H_x, H^_g)) for x in {s, e}.
  nn::Var ExistenceAwareStart(const nn::Var& h_s, const nn::Var& h_hat_g) const;
  nn::Var ExistenceAwareEnd(const nn::Var& h_e, const nn::Var& h_hat_g) const;
  // H~_g = LN(H^_g + Attention(H^_g, context)); the context is the stack of
  // H_s and H_e by default.
  nn::Var UpdateExistence(const nn::Var& h_hat_g, const nn::Var& h_s,
                          const nn::Var& h_e, const nn::Var& h_u) const;

  InteractionState Forward(const nn::Var& h_u, const nn::Var& h_g) const;

  const LabelAttention& start_labels() const { return start_labels_; }
  const LabelAttention& end_labels() const { return end_labels_; }
  const LabelAttention& exist_labels() const { return exist_labels_; }
  const ResidualAttention& start_aware() const { return start_aware_; }
  const ResidualAttention& end_aware() const { return end_aware_; }
  const ResidualAttention& exist_update() const { return exist_update_; }

 private:
  ExistenceContext context_;
  LabelAttention start_labels_;
  LabelAttention end_labels_;
  LabelAttention exist_labels_;
  ResidualAttention start_aware_;
  ResidualAttention end_aware_;
  ResidualAttention exist_update_;
};

}  // namespace spanground

#endif  // SPANGROUND_EXISTENCE_EXISTENCE_H_
