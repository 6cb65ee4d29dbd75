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

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any gating criterion fails.
//
//   acceptance [--only 2,3]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "core/error.h"
#include "existence/existence.h"
#include "fusion/fusion.h"
#include "grounding/grounding.h"
#include "harness/checkpoint.h"
#include "harness/joint_model.h"
#include "harness/synthetic.h"
#include "harness/trainer.h"
#include "heads/heads.h"
#include "metrics/metrics.h"
#include "objective/objective.h"
#include "oracles.h"
#include "test_util.h"
#include "weaksup/weaksup.h"

namespace spanground {
namespace {

namespace fs = std::filesystem;
using nn::Matrix;
using nn::Var;
using testing::RandomMatrix;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since)
      .count();
}

// Training log of the overfit run, re-checked by the persistence criterion.
std::vector<StepRecord> overfit_log;
LossWeights overfit_weights;

// ---- 1. Tiny overfit ---------------------------------------------------------

Outcome TinyOverfit() {
  const auto start = std::chrono::steady_clock::now();
  SyntheticOptions options;
  options.examples = 32;
  const Dataset train = MakeSyntheticDataset(options);
  const RunConfig config = SyntheticRunConfig(train);
  JointModel model(config);
  Trainer trainer(model);
  const TrainResult result = trainer.Train(train, nullptr, TrainOptions{});
  const Evaluation ev = Evaluate(model, train, config.batch_size);
  const double elapsed = Seconds(start);
  overfit_log = result.log;
  overfit_weights = {config.loss.lambda1, config.loss.lambda2};

  // The checkpoint of the run scores the same on its own training set.
  const fs::path path = fs::temp_directory_path() / "spanground-accept.ckpt";
  WriteCheckpoint(path.string(), CaptureCheckpoint(model, nullptr));
  auto restored = RestoreModel(ReadCheckpoint(path.string()), std::nullopt);
  fs::remove(path);
  const Evaluation again = Evaluate(*restored, train, config.batch_size);

  const EvalReport& r = ev.report;
  const bool pass = result.log.size() <= 500 && r.f1 >= 0.95 &&
                    r.accu_050 >= 0.90 && elapsed < 300.0 &&
                    again.report.f1 == r.f1 &&
                    again.report.accu_050 == r.accu_050;
  return {pass, Format("%zu steps, F1 %.3f, Accu@0.5 %.3f, restored F1 %.3f "
                       "Accu@0.5 %.3f, %.1f s",
                       result.log.size(), r.f1, r.accu_050, again.report.f1,
                       again.report.accu_050, elapsed)};
}

// ---- 2. Gradient suite -------------------------------------------------------

constexpr int kGradInstances = 20;
constexpr int kAllEntries = 1 << 20;  // check every parameter entry

ModelConfig GradConfig(int d, int heads) {
  ModelConfig c;
  c.hidden = d;
  c.heads = heads;
  c.dropout = 0.0;
  return c;
}

std::vector<std::string> AllParams(const nn::ParamStore& store) {
  std::vector<std::string> names;
  for (const auto& [name, v] : store.params()) names.push_back(name);
  return names;
}

// Grounding geometry with a 1x1 and a 2x2 grid.
AnchorSet TwoByTwoAnchors() {
  std::vector<ScaleGeometry> scales(2);
  scales[0] = {1, 256.0, {{{160, 200}, {200, 160}, {256, 256}}}};
  scales[1] = {2, 128.0, {{{40, 40}, {80, 60}, {60, 80}}}};
  return AnchorSet(scales);
}

BBox RandomBox(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> corner(0.0, 180.0), size(20.0, 76.0);
  const double x = corner(rng), y = corner(rng);
  return {x, y, x + size(rng), y + size(rng)};
}

double FusionGradient(unsigned seed) {
  std::mt19937_64 rng(seed);
  nn::ParamStore store;
  const int d = 8;
  Fusion fusion(store, GradConfig(d, 2), rng);
  const int c = 4 + seed % 5;
  const Matrix h_prime = RandomMatrix(c, d, rng);
  const std::array<Matrix, 3> maps = {RandomMatrix(1, d, rng),
                                      RandomMatrix(4, d, rng),
                                      RandomMatrix(4, d, rng)};
  auto loss = [&](const Var& h, const VisualPyramid& p) {
    const FusedState s = fusion.Forward(h, 1, 2, fusion.ProjectPyramid(p));
    const std::vector<Var> parts = {testing::Project(s.h_u, 1),
                                    testing::Project(s.q, 2),
                                    testing::Project(s.h_g, 3)};
    return nn::Sum(nn::ConcatCols(parts));
  };
  const double inputs = testing::GradCheck(
      [&](const std::vector<Var>& v) {
        VisualPyramid p;
        for (int i = 0; i < 3; ++i) p.maps[i] = v[i + 1];
        return loss(v[0], p);
      },
      {h_prime, maps[0], maps[1], maps[2]});
  VisualPyramid fixed;
  for (int i = 0; i < 3; ++i) fixed.maps[i] = Var(maps[i]);
  const double params = testing::ParamGradCheck(
      store, AllParams(store), [&] { return loss(Var(h_prime), fixed); }, kAllEntries);
  return std::max(inputs, params);
}

double LabelAttentionGradient(unsigned seed) {
  std::mt19937_64 rng(seed);
  nn::ParamStore store;
  const int d = seed % 2 ? 8 : 16;
  LabelAttention la(store, "la", d, 2, rng);
  const Matrix rows = RandomMatrix(2 + seed % 7, d, rng);
  const double inputs = testing::GradCheck(
      [&](const std::vector<Var>& v) {
        return testing::Project(la.Forward(v[0]));
      },
      {rows});
  const double params = testing::ParamGradCheck(
      store, AllParams(store),
      [&] { return testing::Project(la.Forward(Var(rows))); },
      kAllEntries);
  return std::max(inputs, params);
}

double ExistenceAwareGradient(unsigned seed) {
  std::mt19937_64 rng(seed);
  nn::ParamStore store;
  const int d = 8;
  ExistenceInteraction ei(store, GradConfig(d, 2), rng);
  const int c = 3 + seed % 6;
  const Matrix hs = RandomMatrix(c, d, rng);
  const Matrix he = RandomMatrix(c, d, rng);
  const Matrix hg = RandomMatrix(1, d, rng);
  auto loss = [&](const Var& s, const Var& e, const Var& g) {
    return nn::Add(testing::Project(ei.ExistenceAwareStart(s, g), 1),
                   testing::Project(ei.ExistenceAwareEnd(e, g), 2));
  };
  const double inputs = testing::GradCheck(
      [&](const std::vector<Var>& v) { return loss(v[0], v[1], v[2]); },
      {hs, he, hg});
  std::vector<std::string> names;
  for (const std::string& n : AllParams(store)) {
    if (n.find("aware") != std::string::npos) names.push_back(n);
  }
  const double params = testing::ParamGradCheck(
      store, names, [&] { return loss(Var(hs), Var(he), Var(hg)); },
      kAllEntries);
  return std::max(inputs, params);
}

double QgLossGradient(unsigned seed) {
  std::mt19937_64 rng(seed);
  const AnchorSet anchors = TwoByTwoAnchors();
  const BBox gold = RandomBox(rng);
  return testing::GradCheck(
      [&](const std::vector<Var>& v) {
        return ComputeQgLoss(v, gold, anchors).total;
      },
      {RandomMatrix(1, kPredictionChannels, rng),
       RandomMatrix(4, kPredictionChannels, rng)});
}

// The weighted sum of the three task losses over one query instance, built
// from fusion through the heads on random encoder outputs.
double TotalLossGradient(unsigned seed) {
  std::mt19937_64 rng(seed);
  nn::ParamStore store;
  const int d = 4;
  const ModelConfig cfg = GradConfig(d, 2);
  Fusion fusion(store, cfg, rng);
  ExistenceInteraction ei(store, cfg, rng);
  SpanHeads heads(store, cfg, rng);
  GroundingHead grounding(store, cfg, rng);
  const AnchorSet anchors = TwoByTwoAnchors();

  // Query at 1..2, sentence at 4..c-2.
  const int c = 7 + seed % 2;
  const Matrix h_prime = RandomMatrix(c, d, rng);
  VisualPyramid pyramid;
  pyramid.maps = {Var(RandomMatrix(1, d, rng)), Var(RandomMatrix(4, d, rng)),
                  Var(RandomMatrix(4, d, rng))};
  std::vector<int> start_labels(c, 0), end_labels(c, 0);
  std::vector<double> mask(c, 0.0);
  for (int p = 4; p < c - 1; ++p) mask[p] = 1.0;
  start_labels[4] = 1;
  end_labels[5] = 1;
  const std::vector<PositionPair> pairs = {{4, 5}, {4, 4}, {5, c - 2}};
  const std::vector<double> targets = {1.0, 0.0, 0.0};
  const bool exists = seed % 2 == 0;
  const BBox gold = exists ? RandomBox(rng) : BBox::WholeImage();

  auto parts = [&](const Var& h) {
    const FusedState f = fusion.Forward(h, 1, 2, fusion.ProjectPyramid(pyramid));
    const InteractionState s = ei.Forward(f.h_u, f.h_g);
    const EspLoss esp = ComputeEspLoss(
        heads.StartLogits(s.h_tilde_s), heads.EndLogits(s.h_tilde_e),
        start_labels, end_labels, mask,
        heads.MatchLogits(s.h_tilde_s, s.h_tilde_e, pairs), targets);
    const std::vector<Var> maps = {pyramid.maps[0], pyramid.maps[1]};
    const QgLoss qg = ComputeQgLoss(
        grounding.PredictOffsets(grounding.FuseSpatial(f.q, maps)), gold,
        anchors);
    return std::array<Var, 3>{qg.total,
                              ComputeEdLoss(heads.ExistenceLogits(s.h_tilde_g),
                                            exists),
                              esp.total};
  };
  // omega is fixed at the unperturbed point, as in a training step.
  const auto base = parts(Var(h_prime));
  const double omega = BalanceFactor(base[2].scalar(), base[0].scalar());
  auto total = [&](const Var& h) {
    const auto p = parts(h);
    return TotalLoss(p[0], p[1], p[2], omega, LossWeights{});
  };
  const double inputs = testing::GradCheck(
      [&](const std::vector<Var>& v) { return total(v[0]); }, {h_prime});
  const double params = testing::ParamGradCheck(
      store, AllParams(store), [&] { return total(Var(h_prime)); }, kAllEntries);
  return std::max(inputs, params);
}

Outcome GradientSuite() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<std::pair<const char*, std::function<double(unsigned)>>>
      checks = {{"fusion", FusionGradient},
                {"label attention", LabelAttentionGradient},
                {"existence-aware attention", ExistenceAwareGradient},
                {"grounding loss", QgLossGradient},
                {"total loss", TotalLossGradient}};
  bool pass = true;
  std::string detail;
  for (const auto& [name, check] : checks) {
    double worst = 0.0;
    for (int k = 0; k < kGradInstances; ++k) {
      worst = std::max(worst, check(100 + k));
    }
    pass &= worst < 1e-4;
    detail += Format("%s %.1e, ", name, worst);
  }
  const double elapsed = Seconds(start);
  pass &= elapsed < 60.0;
  return {pass, detail + Format("%d instances each, %.1f s", kGradInstances,
                                elapsed)};
}

// ---- 3. Balance factor -------------------------------------------------------

// Decade by the library-independent route; `nullopt` near a decade boundary.
std::optional<int> Decade(double x) {
  const double l = std::log10(x);
  const double f = std::floor(l);
  if (l - f < 1e-9 || f + 1 - l < 1e-9) return std::nullopt;
  return static_cast<int>(f);
}

Outcome BalanceProperties() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> exponent(-4.0, 4.0);
  std::uniform_int_distribution<int> shift(-3, 3);
  int failures = 0, checked = 0;
  for (int k = 0; k < 10000; ++k) {
    const double a = std::pow(10.0, exponent(rng));
    const double b = std::pow(10.0, exponent(rng));
    const auto da = Decade(a), db = Decade(b);
    if (!da || !db) continue;
    ++checked;
    const double w = BalanceFactor(a, b);
    if (w != std::pow(10.0, -std::abs(*da - *db))) ++failures;
    if (w != BalanceFactor(b, a)) ++failures;
    const double s = std::pow(10.0, shift(rng));
    if (Decade(a * s) && Decade(b * s) && BalanceFactor(a * s, b * s) != w) {
      ++failures;
    }
    const double lo = std::min(a, b), hi = std::max(a, b);
    const auto scaled = Decade(w * hi);
    if (scaled && *scaled != *Decade(lo)) ++failures;
  }
  return {failures == 0 && checked >= 9990,
          Format("%d pairs off decade boundaries, %d failures", checked,
                 failures)};
}

// ---- 4. Metric oracles -------------------------------------------------------

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

// Overlap of [a1, a2] and [b1, b2] from the hull length.
double Overlap(double a1, double a2, double b1, double b2) {
  const double hull = std::max(a2, b2) - std::min(a1, b1);
  return std::max(0.0, (a2 - a1) + (b2 - b1) - hull);
}

Outcome MetricOracles() {
  std::mt19937_64 rng(12);
  int span_failures = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<EntitySpan>> pred, gold;
    for (int e = 0; e < 5; ++e) {
      pred.push_back(RandomSpans(rng, 4));
      std::vector<EntitySpan> g = RandomSpans(rng, 4);
      std::sort(g.begin(), g.end());
      g.erase(std::unique(g.begin(), g.end()), g.end());
      gold.push_back(g);
    }
    const testing::SpanCounts c = testing::CountSpans(pred, gold);
    const EvalReport r = SpanPrf(pred, gold);
    const double p = c.predicted ? double(c.tp) / c.predicted : 0.0;
    const double rc = c.gold ? double(c.tp) / c.gold : 0.0;
    const double f1 = p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0;
    if (r.counts.tp != c.tp || r.counts.fp != c.predicted - c.tp ||
        r.counts.fn != c.gold - c.tp || std::abs(r.precision - p) > 1e-12 ||
        std::abs(r.recall - rc) > 1e-12 || std::abs(r.f1 - f1) > 1e-12) {
      ++span_failures;
    }
  }

  std::uniform_real_distribution<double> u(0.0, kFrameSize);
  auto random_box = [&] {
    double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    if (a == b) b += 1e-3;
    if (c == d) d += 1e-3;
    return BBox{std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)};
  };
  int iou_failures = 0;
  for (int k = 0; k < 10000; ++k) {
    const BBox a = random_box(), b = random_box();
    const double inter =
        Overlap(a.x1, a.x2, b.x1, b.x2) * Overlap(a.y1, a.y2, b.y1, b.y2);
    const double expected =
        inter / ((a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) -
                 inter);
    if (std::abs(Iou(a, b) - expected) > 1e-9) ++iou_failures;
  }

  int monotone_failures = 0;
  std::uniform_real_distribution<double> corner(0, 200), size(5, 56);
  for (int k = 0; k < 1000; ++k) {
    std::vector<BBox> pred, gold;
    for (int i = 0; i < 5; ++i) {
      const double x = corner(rng), y = corner(rng);
      gold.push_back({x, y, x + size(rng), y + size(rng)});
      const double px = x + size(rng) / 4;
      const double py = std::max(0.0, y - size(rng) / 4);
      pred.push_back({px, py, px + size(rng), py + size(rng)});
    }
    double previous = 1.0;
    for (int step = 0; step <= 20; ++step) {
      const double a = AccuracyAt(pred, gold, step / 20.0);
      if (a > previous) ++monotone_failures;
      previous = a;
    }
  }

  // Unanimous raters agree perfectly; two raters who always split disagree
  // perfectly.
  const double unanimous = FleissKappa({{3, 0}, {0, 3}, {3, 0}});
  const double split = FleissKappa({{1, 1}, {1, 1}});
  const bool kappa_ok =
      std::abs(unanimous - 1.0) < 1e-12 && std::abs(split + 1.0) < 1e-12;

  return {span_failures == 0 && iou_failures == 0 && monotone_failures == 0 &&
              kappa_ok,
          Format("span mismatches %d/200, IoU mismatches %d/10000, "
                 "non-monotone %d, kappa %.3f and %.3f",
                 span_failures, iou_failures, monotone_failures, unanimous,
                 split)};
}

// ---- 5. Decoding ---------------------------------------------------------------

double Logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Outcome DecodeEquivalence() {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 12);
  DecodeOptions opt;
  int span_mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = len(rng);
    std::vector<double> sp(n), ep(n);
    for (int i = 0; i < n; ++i) {
      sp[i] = u(rng);
      ep[i] = u(rng);
    }
    std::vector<std::vector<double>> m(n, std::vector<double>(n));
    for (auto& row : m) {
      for (double& v : row) v = std::round(u(rng) * 20) / 20;  // forces ties
    }
    const auto got =
        ExtractSpans(sp, ep, [&](int i, int j) { return m[i][j]; }, opt);
    if (got != testing::GreedyOracle(sp, ep, m, opt)) ++span_mismatches;
  }

  const AnchorSet anchors = AnchorSet::Standard(ModelConfig().anchors);
  int box_mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Matrix> raw;
    for (int s = 0; s < anchors.scale_count(); ++s) {
      const int g = anchors.scale(s).grid;
      raw.push_back(RandomMatrix(g * g, kPredictionChannels, rng, 2.0));
    }
    int best = -1;
    double best_p = -1.0;
    for (int flat = 0; flat < anchors.total_anchors(); ++flat) {
      const AnchorIndex i = anchors.Unflatten(flat);
      const int g = anchors.scale(i.scale).grid;
      const double p =
          Logistic(raw[i.scale](i.row * g + i.col, i.anchor * 5 + 4));
      if (p > best_p) {
        best_p = p;
        best = flat;
      }
    }
    if (anchors.Flatten(SelectBox(raw, anchors).index) != best) {
      ++box_mismatches;
    }
  }
  return {span_mismatches == 0 && box_mismatches == 0 &&
              anchors.total_anchors() == 4032,
          Format("span mismatches %d/500, box mismatches %d/100 over %d anchors",
                 span_mismatches, box_mismatches, anchors.total_anchors())};
}

// ---- 6. Weak supervision -------------------------------------------------------

std::vector<std::string> Ids(const std::vector<PhraseSample>& v) {
  std::vector<std::string> ids;
  for (const auto& s : v) ids.push_back(s.id);
  return ids;
}

Outcome WeakSupervision() {
  const auto queries = testing::AnnotationQueries();
  testing::PlantedCorpus c = testing::MakePlantedCorpus(queries);
  const FilterOutcome out =
      FilterBySimilarity(c.samples, queries, c.embedder, 0.7);
  std::map<std::string, EntityType> kept;
  for (const PhraseSample& s : out.kept) kept[s.id] = s.type.value();
  const bool subset_ok = kept == c.planned;

  const std::vector<PhraseSample> copies = ReplaceQueries(out.kept, queries);
  bool copies_ok = copies.size() == out.kept.size();
  for (size_t i = 0; copies_ok && i < copies.size(); ++i) {
    copies_ok = std::memcmp(&copies[i].box, &out.kept[i].box,
                            sizeof(PixelBox)) == 0 &&
                copies[i].image_ref == out.kept[i].image_ref;
  }

  const WeakCorpus a =
      BuildWeakCorpus(c.samples, {}, queries, c.embedder, 0.7, {}, 5);
  const WeakCorpus b =
      BuildWeakCorpus(c.samples, {}, queries, c.embedder, 0.7, {}, 5);
  const double n = static_cast<double>(a.splits.train.size() +
                                       a.splits.val.size() +
                                       a.splits.test.size());
  const bool sizes_ok =
      std::abs(a.splits.train.size() - 0.9 * n) <= 1.0 &&
      std::abs(a.splits.val.size() - 0.05 * n) <= 1.0 &&
      std::abs(a.splits.test.size() - 0.05 * n) <= 1.0;
  const bool same_seed = Ids(a.splits.train) == Ids(b.splits.train) &&
                         Ids(a.splits.val) == Ids(b.splits.val) &&
                         Ids(a.splits.test) == Ids(b.splits.test);
  return {subset_ok && copies_ok && sizes_ok && same_seed,
          Format("kept %zu of 100 (planned %zu), splits %zu/%zu/%zu, "
                 "copies %s, same seed %s",
                 out.kept.size(), c.planned.size(), a.splits.train.size(),
                 a.splits.val.size(), a.splits.test.size(),
                 copies_ok ? "identical" : "differ",
                 same_seed ? "identical" : "differ")};
}

// ---- 7. Determinism and persistence -------------------------------------------

RunConfig SmallRunConfig() {
  RunConfig c;
  ModelConfig& m = c.model;
  m.hidden = 16;
  m.heads = 2;
  m.dropout = 0.1;
  m.text_hidden = 16;
  m.text_layers = 1;
  m.text_heads = 2;
  m.text_vocab_buckets = 128;
  m.max_text_length = 96;
  m.visual_channels = {8, 8, 8};
  c.batch_size = 2;
  c.epochs = 10;
  c.max_steps = 10;
  c.seed = 5;
  return c;
}

Outcome DeterminismAndPersistence() {
  SyntheticOptions options;
  options.examples = 4;
  const Dataset data = MakeSyntheticDataset(options);
  const RunConfig config = SmallRunConfig();
  auto run = [&] {
    JointModel model(config);
    Trainer trainer(model);
    return trainer.Train(data, nullptr, TrainOptions{}).log;
  };
  const auto first = run();
  const auto second = run();
  bool same = first.size() == 10 && second.size() == 10;
  for (size_t i = 0; same && i < first.size(); ++i) {
    same = FormatStepRecord(first[i]) == FormatStepRecord(second[i]);
  }

  JointModel model(config);
  Trainer trainer(model);
  const auto batch = Pointers(data);
  for (int i = 0; i < 3; ++i) trainer.Step(batch);
  const BatchLosses before = EvalLosses(model, batch);
  const fs::path path = fs::temp_directory_path() / "spanground-accept7.ckpt";
  WriteCheckpoint(path.string(), CaptureCheckpoint(model, nullptr));
  auto restored = RestoreModel(ReadCheckpoint(path.string()), std::nullopt);
  fs::remove(path);
  const BatchLosses after = EvalLosses(*restored, batch);
  const bool restored_ok = after.qg.scalar() == before.qg.scalar() &&
                           after.ed.scalar() == before.ed.scalar() &&
                           after.esp.scalar() == before.esp.scalar();

  // Every logged total, from these runs and the overfit run when present.
  int recomposed = 0, mismatched = 0;
  auto check_log = [&](const std::vector<StepRecord>& log,
                       const LossWeights& w) {
    for (const StepRecord& r : log) {
      ++recomposed;
      const StepRecord parsed = ParseStepRecord(FormatStepRecord(r));
      if (parsed.total !=
          TotalLoss(LossBundle{parsed.qg, parsed.ed, parsed.esp, parsed.omega,
                               w.lambda1, w.lambda2})) {
        ++mismatched;
      }
    }
  };
  check_log(first, {config.loss.lambda1, config.loss.lambda2});
  check_log(overfit_log, overfit_weights);

  return {same && restored_ok && mismatched == 0,
          Format("first 10 losses %s, restored batch loss %s, %d/%d logged "
                 "totals recompose",
                 same ? "identical" : "differ",
                 restored_ok ? "identical" : "differs",
                 recomposed - mismatched, recomposed)};
}

}  // namespace
}  // namespace spanground

int main(int argc, char** argv) {
  CLI::App app("Acceptance criteria for the joint model");
  std::vector<int> only;
  app.add_option("--only", only, "Criteria to run (default: all)")
      ->delimiter(',')
      ->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  using namespace spanground;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria =
      {{"tiny overfit", TinyOverfit},
       {"gradient suite", GradientSuite},
       {"balance factor", BalanceProperties},
       {"metric oracles", MetricOracles},
       {"decode equivalence", DecodeEquivalence},
       {"weak supervision", WeakSupervision},
       {"determinism and persistence", DeterminismAndPersistence}};
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome outcome;
    try {
      outcome = criteria[k].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    failed += !outcome.pass;
    std::printf("%s  %d %s: %s\n", outcome.pass ? "PASS" : "FAIL", id,
                criteria[k].first, outcome.detail.c_str());
    std::fflush(stdout);
  }
  if (selected.empty() || selected.count(8)) {
    std::printf(
        "SKIP  8 real-data integration: needs user-supplied tweet images, "
        "pretrained backbones and weak-supervision boxes; not gating\n");
  }
  return failed == 0 ? 0 : 1;
}
