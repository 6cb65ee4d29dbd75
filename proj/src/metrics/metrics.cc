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

#include "metrics/metrics.h"

#include <cstdio>
#include <set>
#include <sstream>

#include "core/error.h"

namespace spanground {

namespace {

std::string Num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

GroundingScores Scores(const GroundingTotals& t) {
  GroundingScores s;
  if (t.count > 0) {
    const double n = static_cast<double>(t.count);
    s.accu_050 = t.hits_050 / n;
    s.accu_075 = t.hits_075 / n;
    s.miou = t.iou_sum / n;
  }
  return s;
}

}  // namespace

double PrfCounts::precision() const {
  return tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
}

double PrfCounts::recall() const {
  return tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
}

double PrfCounts::f1() const { return F1Score(precision(), recall()); }

double F1Score(double precision, double recall) {
  return precision + recall > 0.0
             ? 2.0 * precision * recall / (precision + recall)
             : 0.0;
}

PrfCounts CountSpanMatches(std::span<const EntitySpan> predicted,
                           std::span<const EntitySpan> gold,
                           std::map<EntityType, PrfCounts>* per_type) {
  std::set<EntitySpan> unique_pred(predicted.begin(), predicted.end());
  std::multiset<EntitySpan> gold_pool(gold.begin(), gold.end());
  PrfCounts c;
  for (const EntitySpan& p : unique_pred) {
    auto it = gold_pool.find(p);
    if (it != gold_pool.end()) {
      gold_pool.erase(it);
      ++c.tp;
      if (per_type) ++(*per_type)[p.type].tp;
    } else {
      ++c.fp;
      if (per_type) ++(*per_type)[p.type].fp;
    }
  }
  for (const EntitySpan& g : gold_pool) {
    ++c.fn;
    if (per_type) ++(*per_type)[g.type].fn;
  }
  return c;
}

void GroundingTotals::Add(const BBox& predicted, const BBox& gold) {
  const double iou = Iou(predicted, gold);
  ++count;
  if (iou >= 0.5) ++hits_050;
  if (iou >= 0.75) ++hits_075;
  iou_sum += iou;
}

std::string EvalReport::ToTable() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-8s %9s %9s %9s %7s %7s %7s\n", "type",
                "precision", "recall", "f1", "tp", "fp", "fn");
  out << line;
  for (EntityType t : kAllEntityTypes) {
    auto it = per_type_counts.find(t);
    const PrfCounts c = it == per_type_counts.end() ? PrfCounts{} : it->second;
    std::snprintf(line, sizeof(line),
                  "%-8s %9.4f %9.4f %9.4f %7ld %7ld %7ld\n",
                  std::string(EntityTypeName(t)).c_str(), c.precision(),
                  c.recall(), c.f1(), c.tp, c.fp, c.fn);
    out << line;
  }
  std::snprintf(line, sizeof(line), "%-8s %9.4f %9.4f %9.4f %7ld %7ld %7ld\n",
                "overall", precision, recall, f1, counts.tp, counts.fp,
                counts.fn);
  out << line;
  if (no_entities) out << "(no entities in predictions or gold)\n";
  std::snprintf(line, sizeof(line),
                "grounding: Accu@0.5 %.4f  Accu@0.75 %.4f  mIoU %.4f  (%ld "
                "queries)\n",
                accu_050, accu_075, miou, grounding_count);
  out << line;
  std::snprintf(line, sizeof(line),
                "present:   Accu@0.5 %.4f  Accu@0.75 %.4f  mIoU %.4f  (%ld "
                "queries)\n",
                present_accu_050, present_accu_075, present_miou,
                present_grounding_count);
  out << line;
  return out.str();
}

std::string EvalReport::ToRecord() const {
  std::ostringstream out;
  out << "precision=" << Num(precision) << "\n";
  out << "recall=" << Num(recall) << "\n";
  out << "f1=" << Num(f1) << "\n";
  out << "tp=" << counts.tp << "\nfp=" << counts.fp << "\nfn=" << counts.fn
      << "\n";
  out << "no_entities=" << (no_entities ? 1 : 0) << "\n";
  for (EntityType t : kAllEntityTypes) {
    const std::string name(EntityTypeName(t));
    auto f = per_type_f1.find(t);
    if (f != per_type_f1.end()) out << "f1." << name << "=" << Num(f->second) << "\n";
    auto c = per_type_counts.find(t);
    if (c != per_type_counts.end()) {
      out << "tp." << name << "=" << c->second.tp << "\n";
      out << "fp." << name << "=" << c->second.fp << "\n";
      out << "fn." << name << "=" << c->second.fn << "\n";
    }
  }
  out << "accu_050=" << Num(accu_050) << "\n";
  out << "accu_075=" << Num(accu_075) << "\n";
  out << "miou=" << Num(miou) << "\n";
  out << "grounding_count=" << grounding_count << "\n";
  out << "present_accu_050=" << Num(present_accu_050) << "\n";
  out << "present_accu_075=" << Num(present_accu_075) << "\n";
  out << "present_miou=" << Num(present_miou) << "\n";
  out << "present_grounding_count=" << present_grounding_count << "\n";
  return out.str();
}

EvalReport EvalReport::FromRecord(const std::string& record) {
  EvalReport r;
  std::istringstream in(record);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kDataError, "malformed report line: " + line);
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    const size_t dot = key.find('.');
    if (dot != std::string::npos) {
      const std::string field = key.substr(0, dot);
      const EntityType t = ParseEntityType(key.substr(dot + 1));
      if (field == "f1") r.per_type_f1[t] = std::stod(value);
      else if (field == "tp") r.per_type_counts[t].tp = std::stol(value);
      else if (field == "fp") r.per_type_counts[t].fp = std::stol(value);
      else if (field == "fn") r.per_type_counts[t].fn = std::stol(value);
      continue;
    }
    if (key == "precision") r.precision = std::stod(value);
    else if (key == "recall") r.recall = std::stod(value);
    else if (key == "f1") r.f1 = std::stod(value);
    else if (key == "tp") r.counts.tp = std::stol(value);
    else if (key == "fp") r.counts.fp = std::stol(value);
    else if (key == "fn") r.counts.fn = std::stol(value);
    else if (key == "no_entities") r.no_entities = value == "1";
    else if (key == "accu_050") r.accu_050 = std::stod(value);
    else if (key == "accu_075") r.accu_075 = std::stod(value);
    else if (key == "miou") r.miou = std::stod(value);
    else if (key == "grounding_count") r.grounding_count = std::stol(value);
    else if (key == "present_accu_050") r.present_accu_050 = std::stod(value);
    else if (key == "present_accu_075") r.present_accu_075 = std::stod(value);
    else if (key == "present_miou") r.present_miou = std::stod(value);
    else if (key == "present_grounding_count") {
      r.present_grounding_count = std::stol(value);
    }
  }
  return r;
}

void EvalAccumulator::AddSpans(std::span<const EntitySpan> predicted,
                               std::span<const EntitySpan> gold) {
  counts_ += CountSpanMatches(predicted, gold, &per_type_);
}

void EvalAccumulator::AddBox(const BBox& predicted, const BBox& gold,
                             bool present) {
  grounding_.Add(predicted, gold);
  if (present) present_.Add(predicted, gold);
}

void EvalAccumulator::Merge(const EvalAccumulator& other) {
  counts_ += other.counts_;
  for (const auto& [t, c] : other.per_type_) per_type_[t] += c;
  grounding_ += other.grounding_;
  present_ += other.present_;
}

EvalReport EvalAccumulator::Finish() const {
  EvalReport r;
  r.counts = counts_;
  r.precision = counts_.precision();
  r.recall = counts_.recall();
  r.f1 = counts_.f1();
  r.no_entities = counts_.tp + counts_.fp + counts_.fn == 0;
  for (EntityType t : kAllEntityTypes) {
    auto it = per_type_.find(t);
    const PrfCounts c = it == per_type_.end() ? PrfCounts{} : it->second;
    r.per_type_counts[t] = c;
    r.per_type_f1[t] = c.f1();
  }
  const GroundingScores all = Scores(grounding_);
  r.accu_050 = all.accu_050;
  r.accu_075 = all.accu_075;
  r.miou = all.miou;
  r.grounding_count = grounding_.count;
  const GroundingScores present = Scores(present_);
  r.present_accu_050 = present.accu_050;
  r.present_accu_075 = present.accu_075;
  r.present_miou = present.miou;
  r.present_grounding_count = present_.count;
  return r;
}

EvalReport SpanPrf(std::span<const std::vector<EntitySpan>> predicted,
                   std::span<const std::vector<EntitySpan>> gold) {
  if (predicted.size() != gold.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "prediction and gold example counts differ");
  }
  EvalAccumulator acc;
  for (size_t i = 0; i < predicted.size(); ++i) acc.AddSpans(predicted[i], gold[i]);
  return acc.Finish();
}

GroundingScores ComputeGroundingScores(std::span<const BBox> predicted,
                                       std::span<const BBox> gold) {
  if (predicted.size() != gold.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "predicted box count " + std::to_string(predicted.size()) +
                    " != gold box count " + std::to_string(gold.size()));
  }
  GroundingTotals t;
  for (size_t i = 0; i < predicted.size(); ++i) t.Add(predicted[i], gold[i]);
  return Scores(t);
}

double AccuracyAt(std::span<const BBox> predicted, std::span<const BBox> gold,
                  double threshold) {
  if (predicted.size() != gold.size()) {
    throw Error(ErrorCode::kInvalidArgument, "box count mismatch");
  }
  if (predicted.empty()) return 0.0;
  long hits = 0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    if (Iou(predicted[i], gold[i]) >= threshold) ++hits;
  }
  return static_cast<double>(hits) / predicted.size();
}

double FleissKappa(const std::vector<std::vector<int>>& ratings) {
  if (ratings.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "Fleiss kappa needs items");
  }
  const size_t categories = ratings[0].size();
  long raters = 0;
  for (int v : ratings[0]) raters += v;
  if (raters < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "Fleiss kappa needs at least 2 raters per item");
  }
  std::vector<double> category_totals(categories, 0.0);
  double agreement_sum = 0.0;
  for (size_t i = 0; i < ratings.size(); ++i) {
    if (ratings[i].size() != categories) {
      throw Error(ErrorCode::kInvalidArgument,
                  "row " + std::to_string(i) + " has a different category count");
    }
    long row_sum = 0;
    double squares = 0.0;
    for (size_t j = 0; j < categories; ++j) {
      if (ratings[i][j] < 0) {
        throw Error(ErrorCode::kInvalidArgument,
                    "row " + std::to_string(i) + " has a negative count");
      }
      row_sum += ratings[i][j];
      squares += static_cast<double>(ratings[i][j]) * ratings[i][j];
      category_totals[j] += ratings[i][j];
    }
    if (row_sum != raters) {
      throw Error(ErrorCode::kInvalidArgument,
                  "row " + std::to_string(i) + " sums to " +
                      std::to_string(row_sum) + ", expected " +
                      std::to_string(raters) + " raters");
    }
    agreement_sum +=
        (squares - raters) / (static_cast<double>(raters) * (raters - 1));
  }
  const double items = static_cast<double>(ratings.size());
  const double observed = agreement_sum / items;
  double chance = 0.0;
  for (double total : category_totals) {
    const double p = total / (items * raters);
    chance += p * p;
  }
  if (chance >= 1.0) return 1.0;
  return (observed - chance) / (1.0 - chance);
}

}  // namespace spanground
