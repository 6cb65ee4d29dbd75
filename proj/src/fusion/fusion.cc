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

#include "fusion/fusion.h"

#include <algorithm>
#include <vector>

#include "core/error.h"

namespace spanground {

AttentionSummary::AttentionSummary(nn::ParamStore& store,
                                   const std::string& name, int dim,
                                   std::mt19937_64& rng) {
  const int half = std::max(1, dim / 2);
  hidden_ = nn::Linear::Create(store, name + ".hidden", dim, half, rng);
  score_ = nn::Linear::Create(store, name + ".score", half, 1, rng);
}

AttentionSummary::Result AttentionSummary::Forward(const nn::Var& rows) const {
  if (rows.rows() == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "attention summary needs at least one row");
  }
  nn::Var scores = score_.Forward(nn::Tanh(hidden_.Forward(rows)));  // m x 1
  nn::Var alpha = nn::SoftmaxRows(nn::Transpose(scores));            // 1 x m
  Result r;
  r.weights = alpha.value().row(0);
  r.summary = nn::MatMul(alpha, rows);
  return r;
}

Fusion::Fusion(nn::ParamStore& store, const ModelConfig& config,
               std::mt19937_64& rng)
    : share_(config.share_scale_attention) {
  const int d = config.hidden;
  query_summary_ = AttentionSummary(store, "fusion.query_summary", d, rng);
  existence_summary_ =
      AttentionSummary(store, "fusion.existence_summary", d, rng);
  const int distinct = share_ ? 1 : 3;
  for (int i = 0; i < distinct; ++i) {
    attention_[i] = nn::MultiHeadAttention(
        store, "fusion.scale" + std::to_string(i) + ".attention", d,
        config.heads, rng);
  }
  ffn_hidden_ = nn::Linear::Create(store, "fusion.ffn_hidden", 2 * d, d, rng);
  ffn_out_ = nn::Linear::Create(store, "fusion.ffn_out", d, d, rng);
}

AttentionSummary::Result Fusion::SummarizeQuery(
    const nn::Var& query_rows) const {
  return query_summary_.Forward(query_rows);
}

AttentionSummary::Result Fusion::SummarizeExistence(
    const nn::Var& h_prime) const {
  return existence_summary_.Forward(h_prime);
}

PyramidKeys Fusion::ProjectPyramid(const VisualPyramid& pyramid) const {
  PyramidKeys keys;
  for (int i = 0; i < 3; ++i) {
    keys[i] = scale_attention(i).Project(pyramid.maps[i]);
  }
  return keys;
}

nn::Var Fusion::CrossModalFuse(
    const nn::Var& h_prime, const PyramidKeys& keys,
    std::array<std::vector<nn::Matrix>, 3>* weights) const {
  std::vector<nn::Var> per_scale;
  for (int i = 0; i < 3; ++i) {
    per_scale.push_back(scale_attention(i).Attend(
        h_prime, keys[i], weights ? &(*weights)[i] : nullptr));
  }
  nn::Var h_a = nn::Mean(per_scale);
  std::vector<nn::Var> parts = {h_a, h_prime};
  nn::Var hidden = nn::Relu(ffn_hidden_.Forward(nn::ConcatCols(parts)));
  return ffn_out_.Forward(hidden);
}

FusedState Fusion::Forward(const nn::Var& h_prime, int query_begin,
                           int query_length, const PyramidKeys& keys) const {
  FusedState s;
  AttentionSummary::Result q =
      SummarizeQuery(nn::SliceRows(h_prime, query_begin, query_length));
  s.q = q.summary;
  s.query_weights = q.weights;
  s.h_u = CrossModalFuse(h_prime, keys);
  AttentionSummary::Result g = SummarizeExistence(h_prime);
  s.h_g = g.summary;
  s.existence_weights = g.weights;
  return s;
}

}  // namespace spanground
