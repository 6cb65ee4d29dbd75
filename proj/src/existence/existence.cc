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

#include "existence/existence.h"

namespace spanground {

LabelAttention::LabelAttention(nn::ParamStore& store, const std::string& name,
                               int dim, int heads, std::mt19937_64& rng) {
  labels_ = store.Create(name + ".labels", nn::NormalInit(2, dim, 1.0, rng));
  attention_ = nn::MultiHeadAttention(store, name + ".attention", dim, heads, rng);
  output_ = store.Create(name + ".output", nn::XavierUniform(2 * dim, dim, rng));
}

nn::Var LabelAttention::LabelContext(const nn::Var& rows,
                                     std::vector<nn::Matrix>* weights) const {
  return attention_.Forward(rows, labels_, weights);
}

nn::Var LabelAttention::Forward(const nn::Var& rows,
                                std::vector<nn::Matrix>* weights) const {
  std::vector<nn::Var> parts = {LabelContext(rows, weights), rows};
  return nn::MatMul(nn::ConcatCols(parts), output_);
}

ResidualAttention::ResidualAttention(nn::ParamStore& store,
                                     const std::string& name, int dim,
                                     int heads, std::mt19937_64& rng) {
  attention_ = nn::MultiHeadAttention(store, name + ".attention", dim, heads, rng);
  norm_ = nn::LayerNorm::Create(store, name + ".norm", dim);
}

nn::Var ResidualAttention::Forward(const nn::Var& rows, const nn::Var& context,
                                   std::vector<nn::Matrix>* weights) const {
  return norm_.Forward(nn::Add(rows, attention_.Forward(rows, context, weights)));
}

ExistenceInteraction::ExistenceInteraction(nn::ParamStore& store,
                                           const ModelConfig& config,
                                           std::mt19937_64& rng)
    : context_(config.existence_context) {
  const int d = config.hidden;
  const int h = config.heads;
  start_labels_ = LabelAttention(store, "existence.start_labels", d, h, rng);
  end_labels_ = LabelAttention(store, "existence.end_labels", d, h, rng);
  exist_labels_ = LabelAttention(store, "existence.exist_labels", d, h, rng);
  start_aware_ = ResidualAttention(store, "existence.start_aware", d, h, rng);
  end_aware_ = ResidualAttention(store, "existence.end_aware", d, h, rng);
  exist_update_ = ResidualAttention(store, "existence.exist_update", d, h, rng);
}

nn::Var ExistenceInteraction::ExistenceAwareStart(const nn::Var& h_s,
                                                  const nn::Var& h_hat_g) const {
  return start_aware_.Forward(h_s, h_hat_g);
}

nn::Var ExistenceInteraction::ExistenceAwareEnd(const nn::Var& h_e,
                                                const nn::Var& h_hat_g) const {
  return end_aware_.Forward(h_e, h_hat_g);
}

nn::Var ExistenceInteraction::UpdateExistence(const nn::Var& h_hat_g,
                                              const nn::Var& h_s,
                                              const nn::Var& h_e,
                                              const nn::Var& h_u) const {
  switch (context_) {
    case ExistenceContext::kFused:
      return exist_update_.Forward(h_hat_g, h_u);
    case ExistenceContext::kStartOnly:
      return exist_update_.Forward(h_hat_g, h_s);
    case ExistenceContext::kStartAndEnd:
      break;
  }
  std::vector<nn::Var> stack = {h_s, h_e};
  return exist_update_.Forward(h_hat_g, nn::ConcatRows(stack));
}

InteractionState ExistenceInteraction::Forward(const nn::Var& h_u,
                                               const nn::Var& h_g) const {
  InteractionState s;
  s.h_s = start_labels_.Forward(h_u);
  s.h_e = end_labels_.Forward(h_u);
  s.h_hat_g = exist_labels_.Forward(h_g);
  s.h_tilde_s = ExistenceAwareStart(s.h_s, s.h_hat_g);
  s.h_tilde_e = ExistenceAwareEnd(s.h_e, s.h_hat_g);
  s.h_tilde_g = UpdateExistence(s.h_hat_g, s.h_s, s.h_e, h_u);
  return s;
}

}  // namespace spanground
