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

#include <algorithm>
#include <random>
#include <vector>

#include "core/error.h"
#include "doctest.h"
#include "metrics/metrics.h"
#include "oracles.h"

namespace spanground {
namespace {

std::vector<EntitySpan> RandomSpans(std::mt19937_64& rng, int max_count) {
  std::uniform_int_distribution<int> count(0, max_count), pos(0, 6), type(0, 3);
  std::vector<EntitySpan> out;
  const int n = count(rng);
  for (int k = 0; k < n; ++k) {
    const int a = pos(rng), b = pos(rng);
    out.push_back({std::min(a, b), std::max(a, b),
                   static_cast<EntityType>(type(rng))});
  }
  return out;
}

TEST_CASE("span scores on hand examples") {
  const std::vector<std::vector<EntitySpan>> gold = {
      {{0, 1, EntityType::kPer}, {3, 3, EntityType::kLoc}}};
  const EvalReport same = SpanPrf(gold, gold);
  CHECK(same.precision == 1.0);
  CHECK(same.recall == 1.0);
  CHECK(same.f1 == 1.0);

  const std::vector<std::vector<EntitySpan>> pred = {
      {{0, 1, EntityType::kPer}, {3, 4, EntityType::kLoc}}};
  const EvalReport half = SpanPrf(pred, gold);
  CHECK(half.precision == 0.5);
  CHECK(half.recall == 0.5);
  CHECK(half.f1 == 0.5);
  CHECK(half.per_type_f1.at(EntityType::kPer) == 1.0);
  CHECK(half.per_type_f1.at(EntityType::kLoc) == 0.0);

  const std::vector<std::vector<EntitySpan>> empty = {{}};
  const EvalReport none = SpanPrf(empty, empty);
  CHECK(none.no_entities);
  CHECK(none.f1 == 0.0);
  CHECK_FALSE(half.no_entities);
}

TEST_CASE("duplicate predictions count once") {
  const std::vector<std::vector<EntitySpan>> gold = {{{0, 1, EntityType::kPer}}};
  const std::vector<std::vector<EntitySpan>> pred = {
      {{0, 1, EntityType::kPer}, {0, 1, EntityType::kPer}}};
  const EvalReport r = SpanPrf(pred, gold);
  CHECK(r.counts.tp == 1);
  CHECK(r.counts.fp == 0);
}

TEST_CASE("span scores match a brute-force counter") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<EntitySpan>> pred, gold;
    for (int e = 0; e < 5; ++e) {
      pred.push_back(RandomSpans(rng, 4));
      gold.push_back(RandomSpans(rng, 4));
      // Gold spans are unique within an example.
      std::sort(gold.back().begin(), gold.back().end());
      gold.back().erase(std::unique(gold.back().begin(), gold.back().end()),
                        gold.back().end());
    }
    const testing::SpanCounts c = testing::CountSpans(pred, gold);
    const long tp = c.tp, n_pred = c.predicted, n_gold = c.gold;
    const EvalReport r = SpanPrf(pred, gold);
    CHECK(r.counts.tp == tp);
    CHECK(r.counts.fp == n_pred - tp);
    CHECK(r.counts.fn == n_gold - tp);
    const double p = n_pred ? double(tp) / n_pred : 0.0;
    const double rc = n_gold ? double(tp) / n_gold : 0.0;
    CHECK(r.precision == doctest::Approx(p));
    CHECK(r.recall == doctest::Approx(rc));

    // Permutation invariance.
    std::reverse(pred.begin(), pred.end());
    std::reverse(gold.begin(), gold.end());
    for (auto& v : pred) std::shuffle(v.begin(), v.end(), rng);
    const EvalReport permuted = SpanPrf(pred, gold);
    CHECK(permuted.counts.tp == r.counts.tp);
    CHECK(permuted.f1 == r.f1);
  }
}

TEST_CASE("f1 lies between precision and recall") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<long> c(0, 30);
  for (int k = 0; k < 1000; ++k) {
    const PrfCounts counts{c(rng), c(rng), c(rng)};
    const double p = counts.precision(), r = counts.recall(), f = counts.f1();
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    if (p > 0 && r > 0) {
      CHECK(f <= std::max(p, r) + 1e-15);
      CHECK(f >= std::min(p, r) - 1e-15);
    }
  }
}

TEST_CASE("grounding scores on hand examples") {
  const std::vector<BBox> gold = {{0, 0, 10, 10}, {0, 0, 10, 10}};
  const GroundingScores same = ComputeGroundingScores(gold, gold);
  CHECK(same.accu_050 == 1.0);
  CHECK(same.accu_075 == 1.0);
  CHECK(same.miou == 1.0);
  // IoU 0.6 (6x10 inside 10x10) and 0.3 (3x10 inside 10x10).
  const std::vector<BBox> pred = {{0, 0, 6, 10}, {0, 0, 3, 10}};
  const GroundingScores s = ComputeGroundingScores(pred, gold);
  CHECK(s.accu_050 == 0.5);
  CHECK(s.accu_075 == 0.0);
  CHECK(s.miou == doctest::Approx(0.45));
  CHECK_THROWS_AS(
      ComputeGroundingScores(std::span(pred).first(1), std::span(gold)), Error);
}

TEST_CASE("accuracy is non-increasing in the threshold") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 200), s(5, 56);
  for (int k = 0; k < 1000; ++k) {
    std::vector<BBox> pred, gold;
    for (int i = 0; i < 5; ++i) {
      const double x = u(rng), y = u(rng);
      gold.push_back({x, y, x + s(rng), y + s(rng)});
      const double px = x + s(rng) / 4, py = y - s(rng) / 4;
      pred.push_back({px, std::max(0.0, py), px + s(rng), std::max(0.0, py) + s(rng)});
    }
    double previous = 1.0;
    for (double tau = 0.0; tau <= 1.0; tau += 0.05) {
      const double a = AccuracyAt(pred, gold, tau);
      CHECK(a <= previous);
      previous = a;
    }
  }
}

TEST_CASE("mean IoU agrees with per-item IoU") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 120), s(5, 100);
  std::vector<BBox> pred, gold;
  double total = 0;
  for (int i = 0; i < 50; ++i) {
    gold.push_back({u(rng), u(rng), 0, 0});
    gold.back().x2 = gold.back().x1 + s(rng);
    gold.back().y2 = gold.back().y1 + s(rng);
    pred.push_back({u(rng), u(rng), 0, 0});
    pred.back().x2 = pred.back().x1 + s(rng);
    pred.back().y2 = pred.back().y1 + s(rng);
    total += Iou(pred.back(), gold.back());
  }
  CHECK(ComputeGroundingScores(pred, gold).miou == doctest::Approx(total / 50));
}

TEST_CASE("fleiss kappa fixtures") {
  CHECK(FleissKappa({{3, 0}, {0, 3}, {3, 0}}) == doctest::Approx(1.0));
  CHECK(FleissKappa({{4, 0, 0}, {4, 0, 0}}) == 1.0);
  CHECK(FleissKappa({{1, 1}, {1, 1}}) == doctest::Approx(-1.0));
  // 3 items, 3 raters, 2 categories.
  // P_i = (1, 1/3, 1), mean 7/9; p_j = (4/9, 5/9), p_e = 41/81.
  const double expected = (7.0 / 9 - 41.0 / 81) / (1 - 41.0 / 81);
  CHECK(expected == doctest::Approx(0.55));
  CHECK(FleissKappa({{3, 0}, {1, 2}, {0, 3}}) == doctest::Approx(expected));
  // P_i = (1, 1/3, 1/3), mean 5/9; p_j = (2/3, 1/3), p_e = 5/9.
  CHECK(FleissKappa({{3, 0}, {1, 2}, {2, 1}}) == doctest::Approx(0.0));
  try {
    FleissKappa({{2, 1}, {1, 1}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
  CHECK_THROWS_AS(FleissKappa({{1, 0}}), Error);
  CHECK(kReferenceAnnotationKappa == 0.85);
}

TEST_CASE("kappa never exceeds one") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> cat(0, 2);
  for (int k = 0; k < 500; ++k) {
    std::vector<std::vector<int>> ratings(6, std::vector<int>(3, 0));
    for (auto& row : ratings) {
      for (int r = 0; r < 4; ++r) ++row[cat(rng)];
    }
    CHECK(FleissKappa(ratings) <= 1.0 + 1e-12);
  }
}

TEST_CASE("report records round trip and shards merge") {
  EvalAccumulator a, b, all;
  const std::vector<EntitySpan> g1 = {{0, 1, EntityType::kPer}};
  const std::vector<EntitySpan> p1 = {{0, 1, EntityType::kPer},
                                      {2, 2, EntityType::kOrg}};
  const std::vector<EntitySpan> g2 = {{4, 5, EntityType::kOther}};
  a.AddSpans(p1, g1);
  b.AddSpans({}, g2);
  a.AddBox({0, 0, 10, 10}, {0, 0, 10, 10}, true);
  b.AddBox({0, 0, 5, 10}, {0, 0, 10, 10}, false);
  all.AddSpans(p1, g1);
  all.AddSpans({}, g2);
  all.AddBox({0, 0, 10, 10}, {0, 0, 10, 10}, true);
  all.AddBox({0, 0, 5, 10}, {0, 0, 10, 10}, false);
  a.Merge(b);
  const EvalReport merged = a.Finish();
  const EvalReport direct = all.Finish();
  CHECK(merged.ToRecord() == direct.ToRecord());
  CHECK(merged.precision == 0.5);
  CHECK(merged.accu_050 == 1.0);
  CHECK(merged.accu_075 == 0.5);
  CHECK(merged.grounding_count == 2);
  // Only the first box belongs to a mentioned type.
  CHECK(merged.present_grounding_count == 1);
  CHECK(merged.present_accu_075 == 1.0);
  CHECK(merged.present_miou == 1.0);

  const EvalReport parsed = EvalReport::FromRecord(merged.ToRecord());
  CHECK(parsed.ToRecord() == merged.ToRecord());
  CHECK(parsed.f1 == merged.f1);
  CHECK(parsed.per_type_counts.at(EntityType::kOrg).fp == 1);
  CHECK(parsed.present_grounding_count == 1);
  const std::string table = merged.ToTable();
  CHECK(table.find("overall") != std::string::npos);
  CHECK(table.find("Accu@0.5") != std::string::npos);
  CHECK_THROWS_AS(EvalReport::FromRecord("garbage"), Error);
}

}  // namespace
}  // namespace spanground
