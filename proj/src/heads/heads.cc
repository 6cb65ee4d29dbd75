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

#include "heads/heads.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "core/error.h"

namespace spanground {

SpanHeads::SpanHeads(nn::ParamStore& store, const ModelConfig& config,
                     std::mt19937_64& rng) {
  const int d = config.hidden;
  exist_ = nn::Linear::Create(store, "heads.exist", d, 2, rng);
  start_ = nn::Linear::Create(store, "heads.start", d, 2, rng);
  end_ = nn::Linear::Create(store, "heads.end", d, 2, rng);
  match_ = store.Create("heads.match", nn::XavierUniform(2 * d, 1, rng));
}

nn::Var SpanHeads::ExistenceLogits(const nn::Var& h_tilde_g) const {
  return exist_.Forward(h_tilde_g);
}

nn::Var SpanHeads::StartLogits(const nn::Var& h_tilde_s) const {
  return start_.Forward(h_tilde_s);
}

nn::Var SpanHeads::EndLogits(const nn::Var& h_tilde_e) const {
  return end_.Forward(h_tilde_e);
}

nn::Var SpanHeads::MatchLogits(const nn::Var& h_tilde_s,
                               const nn::Var& h_tilde_e,
                               std::span<const PositionPair> pairs) const {
  std::vector<int> starts, ends;
  for (const auto& [i, j] : pairs) {
    if (i > j) {
      throw Error(ErrorCode::kInvalidArgument,
                  "match pair has start " + std::to_string(i) + " after end " +
                      std::to_string(j));
    }
    starts.push_back(i);
    ends.push_back(j);
  }
  std::vector<nn::Var> parts = {nn::GatherRows(h_tilde_s, starts),
                                nn::GatherRows(h_tilde_e, ends)};
  return nn::MatMul(nn::ConcatCols(parts), match_);
}

nn::Matrix SoftmaxRows(const nn::Matrix& logits) {
  nn::Matrix out = logits;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double mx = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - mx).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

nn::Matrix MaskToRegion(const nn::Matrix& probabilities, int begin,
                        int length) {
  nn::Matrix out = probabilities;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    if (r >= begin && r < begin + length) continue;
    out.row(r).setZero();
    out(r, 0) = 1.0;
  }
  return out;
}

double MatchProbability(const Eigen::RowVectorXd& start_row,
                        const Eigen::RowVectorXd& end_row,
                        const Eigen::VectorXd& weight, int i, int j) {
  if (i > j) {
    throw Error(ErrorCode::kInvalidArgument, "match requires start <= end");
  }
  const Eigen::Index d = start_row.size();
  const double z = start_row.dot(weight.head(d)) + end_row.dot(weight.tail(d));
  return 1.0 / (1.0 + std::exp(-z));
}

EspLoss ComputeEspLoss(const nn::Var& start_logits, const nn::Var& end_logits,
                       std::span<const int> start_labels,
                       std::span<const int> end_labels,
                       std::span<const double> mask,
                       const nn::Var& match_logits,
                       std::span<const double> match_targets) {
  EspLoss loss;
  loss.start = nn::CrossEntropyRows(start_logits, start_labels, mask);
  loss.end = nn::CrossEntropyRows(end_logits, end_labels, mask);
  if (match_targets.empty()) {
    loss.match = nn::Constant(nn::Matrix::Zero(1, 1));
  } else {
    nn::Matrix targets(static_cast<Eigen::Index>(match_targets.size()), 1);
    for (size_t k = 0; k < match_targets.size(); ++k) {
      targets(static_cast<Eigen::Index>(k), 0) = match_targets[k];
    }
    loss.match = nn::Scale(nn::BceWithLogitsSum(match_logits, targets),
                           1.0 / static_cast<double>(match_targets.size()));
  }
  loss.total = nn::Add(nn::Add(loss.start, loss.end), loss.match);
  return loss;
}

nn::Var ComputeEdLoss(const nn::Var& exist_logits, bool exists) {
  const int label = exists ? 1 : 0;
  const double mask = 1.0;
  return nn::CrossEntropyRows(exist_logits, std::span<const int>(&label, 1),
                              std::span<const double>(&mask, 1));
}

MatchPairs BuildMatchPairs(std::span<const PositionPair> gold,
                           std::span<const int> predicted_starts,
                           std::span<const int> predicted_ends, int max_length,
                           std::mt19937_64& rng, int cap) {
  MatchPairs out;
  std::set<PositionPair> seen;
  auto add = [&](const PositionPair& p, double target) {
    if (static_cast<int>(out.pairs.size()) >= cap) return;
    if (!seen.insert(p).second) return;
    out.pairs.push_back(p);
    out.targets.push_back(target);
  };
  for (const PositionPair& p : gold) add(p, 1.0);
  for (const PositionPair& s : gold) {
    for (const PositionPair& e : gold) {
      if (s.first <= e.second && e.second - s.first < max_length) {
        add({s.first, e.second}, 0.0);
      }
    }
  }
  std::vector<PositionPair> sampled;
  for (int i : predicted_starts) {
    for (int j : predicted_ends) {
      if (i <= j && j - i < max_length && !seen.count({i, j})) {
        sampled.emplace_back(i, j);
      }
    }
  }
  std::shuffle(sampled.begin(), sampled.end(), rng);
  const size_t budget = 2 * std::max<size_t>(1, out.pairs.size());
  for (size_t k = 0; k < sampled.size() && k < budget; ++k) {
    add(sampled[k], 0.0);
  }
  return out;
}

std::vector<std::pair<int, int>> ExtractSpans(
    std::span<const double> start_prob, std::span<const double> end_prob,
    const std::function<double(int, int)>& match,
    const DecodeOptions& options) {
  std::vector<int> starts, ends;
  for (size_t i = 0; i < start_prob.size(); ++i) {
    if (start_prob[i] > options.boundary_threshold) {
      starts.push_back(static_cast<int>(i));
    }
  }
  for (size_t j = 0; j < end_prob.size(); ++j) {
    if (end_prob[j] > options.boundary_threshold) {
      ends.push_back(static_cast<int>(j));
    }
  }
  struct Candidate {
    double score;
    int start;
    int end;
  };
  std::vector<Candidate> candidates;
  for (int i : starts) {
    for (int j : ends) {
      if (i > j || j - i >= options.max_span_length) continue;
      const double m = match(i, j);
      if (m > options.match_threshold) candidates.push_back({m, i, j});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.start != b.start) return a.start < b.start;
              return a.end < b.end;
            });
  std::vector<std::pair<int, int>> chosen;
  for (const Candidate& c : candidates) {
    bool overlaps = false;
    for (const auto& [s, e] : chosen) {
      if (c.start <= e && s <= c.end) {
        overlaps = true;
        break;
      }
    }
    if (!overlaps) chosen.emplace_back(c.start, c.end);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace spanground
