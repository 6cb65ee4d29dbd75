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

#ifndef SPANGROUND_METRICS_METRICS_H_
#define SPANGROUND_METRICS_METRICS_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "core/types.h"

namespace spanground {

struct PrfCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  PrfCounts& operator+=(const PrfCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  double precision() const;
  double recall() const;
  double f1() const;
};

// 2PR / (P + R), 0 when P + R == 0.
double F1Score(double precision, double recall);

// Exact (start, end, type) matching for one example. Duplicate predictions
// count once.
PrfCounts CountSpanMatches(std::span<const EntitySpan> predicted,
                           std::span<const EntitySpan> gold,
                           std::map<EntityType, PrfCounts>* per_type = nullptr);

struct GroundingTotals {
  long count = 0;
  long hits_050 = 0;
  long hits_075 = 0;
  double iou_sum = 0.0;

  GroundingTotals& operator+=(const GroundingTotals& o) {
    count += o.count;
    hits_050 += o.hits_050;
    hits_075 += o.hits_075;
    iou_sum += o.iou_sum;
    return *this;
  }
  void Add(const BBox& predicted, const BBox& gold);
};

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  PrfCounts counts;
  bool no_entities = false;
  std::map<EntityType, double> per_type_f1;
  std::map<EntityType, PrfCounts> per_type_counts;
  // Grounding over every type query, absent types included.
  double accu_050 = 0.0;
  double accu_075 = 0.0;
  double miou = 0.0;
  long grounding_count = 0;
  // The same scores restricted to types mentioned in the sentence.
  double present_accu_050 = 0.0;
  double present_accu_075 = 0.0;
  double present_miou = 0.0;
  long present_grounding_count = 0;

  // Aligned human-readable table.
  std::string ToTable() const;
  // "key=value" lines, values printed to round-trip exactly.
  std::string ToRecord() const;
  static EvalReport FromRecord(const std::string& record);
};

// Additive accumulator so evaluation shards can be merged.
class EvalAccumulator {
 public:
  void AddSpans(std::span<const EntitySpan> predicted,
                std::span<const EntitySpan> gold);
  // `present`: the queried type is mentioned in the sentence.
  void AddBox(const BBox& predicted, const BBox& gold, bool present);
  void Merge(const EvalAccumulator& other);
  EvalReport Finish() const;

 private:
  PrfCounts counts_;
  std::map<EntityType, PrfCounts> per_type_;
  GroundingTotals grounding_;
  GroundingTotals present_;
};

// Micro P/R/F1 over examples; per-type F1.
EvalReport SpanPrf(std::span<const std::vector<EntitySpan>> predicted,
                   std::span<const std::vector<EntitySpan>> gold);

struct GroundingScores {
  double accu_050 = 0.0;
  double accu_075 = 0.0;
  double miou = 0.0;
};

// Throws Error(kInvalidArgument) when the counts differ.
GroundingScores ComputeGroundingScores(std::span<const BBox> predicted,
                                       std::span<const BBox> gold);
// Fraction of pairs with IoU >= threshold.
double AccuracyAt(std::span<const BBox> predicted, std::span<const BBox> gold,
                  double threshold);

// Fleiss' kappa for an items x categories count matrix; each row must sum
// to the same number of raters (>= 2).
double FleissKappa(const std::vector<std::vector<int>>& ratings);

// Agreement of the reference manual box annotations, kept for comparison.
inline constexpr double kReferenceAnnotationKappa = 0.85;

}  // namespace spanground

#endif  // SPANGROUND_METRICS_METRICS_H_
