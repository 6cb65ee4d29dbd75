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

#ifndef SPANGROUND_HEADS_HEADS_H_
#define SPANGROUND_HEADS_HEADS_H_

#include <functional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "core/model_config.h"
#include "nn/layers.h"

namespace spanground {

// Encoder-position pair (start, end), start <= end.
using PositionPair = std::pair<int, int>;

class SpanHeads {
 public:
  SpanHeads(nn::ParamStore& store, const ModelConfig& config,
            std::mt19937_64& rng);

  nn::Var ExistenceLogits(const nn::Var& h_tilde_g) const;  // 1 x 2
  nn::Var StartLogits(const nn::Var& h_tilde_s) const;      // c x 2
  nn::Var EndLogits(const nn::Var& h_tilde_e) const;        // c x 2
  // One logit per pair: w_m . [H~_s[i] ; H~_e[j]]. Throws on i > j.
  nn::Var MatchLogits(const nn::Var& h_tilde_s, const nn::Var& h_tilde_e,
                      std::span<const PositionPair> pairs) const;

  const nn::Linear& exist() const { return exist_; }
  const nn::Linear& start() const { return start_; }
  const nn::Linear& end() const { return end_; }
  const nn::Var& match_weight() const { return match_; }  // 2d x 1

 private:
  nn::Linear exist_;
  nn::Linear start_;
  nn::Linear end_;
  nn::Var match_;
};

// Row softmax of plain matrices.
nn::Matrix SoftmaxRows(const nn::Matrix& logits);

// Positions outside [begin, begin + length) get class-0 probability 1.
nn::Matrix MaskToRegion(const nn::Matrix& probabilities, int begin, int length);

double MatchProbability(const Eigen::RowVectorXd& start_row,
                        const Eigen::RowVectorXd& end_row,
                        const Eigen::VectorXd& weight, int i, int j);

struct EspLoss {
  nn::Var start;
  nn::Var end;
  nn::Var match;
  nn::Var total;
};

// Start/end losses are summed over positions with mask != 0; the match loss
// is the mean BCE over `pairs` (zero when there are none).
EspLoss ComputeEspLoss(const nn::Var& start_logits, const nn::Var& end_logits,
                       std::span<const int> start_labels,
                       std::span<const int> end_labels,
                       std::span<const double> mask, const nn::Var& match_logits,
                       std::span<const double> match_targets);

nn::Var ComputeEdLoss(const nn::Var& exist_logits, bool exists);

struct MatchPairs {
  std::vector<PositionPair> pairs;
  std::vector<double> targets;
};

// Positives are the gold pairs; negatives are the other gold-start x
// gold-end pairs plus up to twice as many pairs sampled from predicted
// boundaries, all capped at `cap` pairs.
MatchPairs BuildMatchPairs(std::span<const PositionPair> gold,
                           std::span<const int> predicted_starts,
                           std::span<const int> predicted_ends, int max_length,
                           std::mt19937_64& rng, int cap = 50);

struct DecodeOptions {
  double boundary_threshold = 0.5;
  double match_threshold = 0.5;
  int max_span_length = 16;
};

// Token-level decoding. `start_prob[i]` / `end_prob[i]` are the positive
// class probabilities of token i; `match(i, j)` is queried only for
// candidates. Returns non-overlapping (start, end) token pairs sorted by
// start.
std::vector<std::pair<int, int>> ExtractSpans(
    std::span<const double> start_prob, std::span<const double> end_prob,
    const std::function<double(int, int)>& match, const DecodeOptions& options);

}  // namespace spanground

#endif  // SPANGROUND_HEADS_HEADS_H_
