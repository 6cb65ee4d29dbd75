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

#include <cmath>
#include <random>
#include <vector>

#include "core/error.h"
#include "core/model_config.h"
#include "doctest.h"
#include "grounding/grounding.h"
#include "test_util.h"

namespace spanground {
namespace {

using nn::Matrix;
using nn::Var;
using testing::RandomMatrix;

AnchorSet DefaultAnchors() { return AnchorSet::Standard(ModelConfig().anchors); }

double Logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<Matrix> RandomRaw(const AnchorSet& anchors, std::mt19937_64& rng,
                              double scale = 1.0) {
  std::vector<Matrix> raw;
  for (int s = 0; s < anchors.scale_count(); ++s) {
    const int g = anchors.scale(s).grid;
    raw.push_back(RandomMatrix(g * g, kPredictionChannels, rng, scale));
  }
  return raw;
}

TEST_CASE("standard anchors cover 1344 locations and 4032 boxes") {
  const AnchorSet a = DefaultAnchors();
  CHECK(a.total_locations() == 1344);
  CHECK(a.total_anchors() == 4032);
  CHECK(15 * a.total_locations() == 20160);
  CHECK(a.scale(0).grid == 8);
  CHECK(a.scale(0).stride == 32.0);
  CHECK(a.scale(2).grid == 32);
  // Largest priors sit on the coarse grid, smallest on the fine grid.
  CHECK(a.scale(0).anchors[2] == AnchorPrior{192, 192});
  CHECK(a.scale(2).anchors[0] == AnchorPrior{8, 8});
  for (int flat = 0; flat < a.total_anchors(); flat += 7) {
    CHECK(a.Flatten(a.Unflatten(flat)) == flat);
  }
  CHECK(a.Unflatten(192) == AnchorIndex{1, 0, 0, 0});
}

TEST_CASE("neutral offsets decode to the prior centered on the cell") {
  const BBox b = DecodeBox({}, {32, 48}, 2, 3, 16);
  CHECK((b.x1 + b.x2) / 2 == doctest::Approx(3.5 * 16));
  CHECK((b.y1 + b.y2) / 2 == doctest::Approx(2.5 * 16));
  CHECK(b.width() == doctest::Approx(32));
  CHECK(b.height() == doctest::Approx(48));
}

TEST_CASE("decode matches the hand formula") {
  // Anchor (32,32), stride 32, cell row 2 col 3, t = (0.5, -0.5, ln 2, 0).
  const BBox b = DecodeBox({0.5, -0.5, std::log(2.0), 0.0}, {32, 32}, 2, 3, 32);
  const double cx = (3 + Logistic(0.5)) * 32;
  const double cy = (2 + Logistic(-0.5)) * 32;
  CHECK(b.x1 == doctest::Approx(cx - 32));
  CHECK(b.x2 == doctest::Approx(cx + 32));
  CHECK(b.y1 == doctest::Approx(cy - 16));
  CHECK(b.y2 == doctest::Approx(cy + 16));
}

TEST_CASE("large x offsets approach but never pass the cell edge") {
  const BBox b = DecodeBox({40.0, 0.0, -3.0, -3.0}, {16, 16}, 1, 1, 32);
  const double cx = (b.x1 + b.x2) / 2;
  CHECK(cx <= 64.0);
  CHECK(cx > 63.9);
}

TEST_CASE("decoded boxes always satisfy the box invariants") {
  const AnchorSet anchors = DefaultAnchors();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> t(0.0, 6.0);
  std::uniform_int_distribution<int> pick(0, anchors.total_anchors() - 1);
  int bad = 0;
  for (int k = 0; k < 100000; ++k) {
    const AnchorIndex idx = anchors.Unflatten(pick(rng));
    const ScaleGeometry& g = anchors.scale(idx.scale);
    const BBox b = DecodeBox({t(rng), t(rng), t(rng), t(rng)},
                             g.anchors[idx.anchor], idx.row, idx.col, g.stride);
    if (!b.valid()) ++bad;
  }
  CHECK(bad == 0);
}

TEST_CASE("select box returns the single positive anchor") {
  const AnchorSet anchors = DefaultAnchors();
  std::vector<Matrix> raw;
  for (int s = 0; s < 3; ++s) {
    const int g = anchors.scale(s).grid;
    raw.push_back(Matrix::Zero(g * g, kPredictionChannels));
    for (int a = 0; a < 3; ++a) raw[s].col(a * 5 + 4).setConstant(-10.0);
  }
  const AnchorIndex target{1, 5, 9, 2};
  raw[1](5 * 16 + 9, 2 * 5 + 4) = 3.0;
  const SelectedBox sel = SelectBox(raw, anchors);
  CHECK(sel.index == target);
  CHECK(sel.box == anchors.NeutralBox(target));
  CHECK(sel.confidence == doctest::Approx(Logistic(3.0)));

  // Tie: an equal logit at a lower flat index wins.
  raw[0](3, 0 * 5 + 4) = 3.0;
  CHECK(SelectBox(raw, anchors).index == AnchorIndex{0, 0, 3, 0});
}

TEST_CASE("select box equals an exhaustive scan and survives monotone maps") {
  const AnchorSet anchors = DefaultAnchors();
  std::mt19937_64 rng(2);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Matrix> raw = RandomRaw(anchors, rng, 2.0);
    int best = -1;
    double best_p = -1.0;
    for (int flat = 0; flat < anchors.total_anchors(); ++flat) {
      const AnchorIndex i = anchors.Unflatten(flat);
      const int g = anchors.scale(i.scale).grid;
      const double p = Logistic(raw[i.scale](i.row * g + i.col, i.anchor * 5 + 4));
      if (p > best_p) {
        best_p = p;
        best = flat;
      }
    }
    const SelectedBox sel = SelectBox(raw, anchors);
    if (anchors.Flatten(sel.index) != best) ++mismatches;
    for (Matrix& m : raw) {
      for (int a = 0; a < 3; ++a) {
        m.col(a * 5 + 4) = (2.0 * m.col(a * 5 + 4).array() + 1.0).matrix();
      }
    }
    if (anchors.Flatten(SelectBox(raw, anchors).index) != best) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("positive anchor is the exhaustive IoU argmax") {
  const AnchorSet anchors = DefaultAnchors();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 256.0);
  for (int trial = 0; trial < 100; ++trial) {
    double x1 = u(rng), x2 = u(rng), y1 = u(rng), y2 = u(rng);
    if (std::abs(x1 - x2) < 1 || std::abs(y1 - y2) < 1) continue;
    const BBox gold{std::min(x1, x2), std::min(y1, y2), std::max(x1, x2),
                    std::max(y1, y2)};
    int best = 0;
    double best_iou = -1;
    for (int flat = 0; flat < 4032; ++flat) {
      const double iou = Iou(anchors.NeutralBox(anchors.Unflatten(flat)), gold);
      if (iou > best_iou) {
        best_iou = iou;
        best = flat;
      }
    }
    CHECK(anchors.Flatten(PositiveAnchor(gold, anchors)) == best);
  }
  // A gold box equal to a neutral box selects that anchor.
  const AnchorIndex idx{2, 17, 4, 1};
  CHECK(PositiveAnchor(anchors.NeutralBox(idx), anchors) == idx);
}

TEST_CASE("whole image gold picks the largest coarse prior") {
  const AnchorSet anchors = DefaultAnchors();
  const AnchorIndex p = PositiveAnchor(BBox::WholeImage(), anchors);
  CHECK(p.scale == 0);
  CHECK(p.anchor == 2);
  // The 192x192 prior at cell (3,3) is centered at (112, 112); cells (3,3),
  // (3,4), (4,3) and (4,4) tie after clipping and the lowest index wins.
  CHECK(p.row == 3);
  CHECK(p.col == 3);
}

TEST_CASE("encoded targets invert the decode") {
  const AnchorSet anchors = DefaultAnchors();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> off(-1.5, 1.5);
  for (int k = 0; k < 200; ++k) {
    const AnchorIndex idx = anchors.Unflatten(
        std::uniform_int_distribution<int>(0, 4031)(rng));
    const ScaleGeometry& g = anchors.scale(idx.scale);
    const BoxOffsets t{off(rng), off(rng), off(rng), off(rng)};
    const BBox b = DecodeBox(t, g.anchors[idx.anchor], idx.row, idx.col,
                             g.stride);
    // Skip boxes the frame clipped; the inverse only holds unclipped.
    const double w = g.anchors[idx.anchor].width * std::exp(t.tw);
    const double h = g.anchors[idx.anchor].height * std::exp(t.th);
    if (std::abs(b.width() - w) > 1e-9 || std::abs(b.height() - h) > 1e-9) {
      continue;
    }
    const BoxTargets e = EncodeTargets(b, anchors, idx);
    CHECK(e.cx == doctest::Approx(Logistic(t.tx)));
    CHECK(e.cy == doctest::Approx(Logistic(t.ty)));
    CHECK(e.tw == doctest::Approx(t.tw));
    CHECK(e.th == doctest::Approx(t.th));
  }
}

TEST_CASE("size targets are clamped") {
  const AnchorSet anchors = DefaultAnchors();
  const AnchorIndex idx{2, 0, 0, 0};  // 8x8 prior
  const BoxTargets t = EncodeTargets({0, 0, 1000, 0.01}, anchors, idx);
  CHECK(t.tw == 4.0);
  CHECK(t.th == -4.0);
}

std::vector<Var> PerfectFit(const AnchorSet& anchors, const BBox& gold) {
  const AnchorIndex p = PositiveAnchor(gold, anchors);
  const BoxTargets t = EncodeTargets(gold, anchors, p);
  std::vector<Var> raw;
  for (int s = 0; s < anchors.scale_count(); ++s) {
    const int g = anchors.scale(s).grid;
    Matrix m = Matrix::Zero(g * g, kPredictionChannels);
    for (int a = 0; a < 3; ++a) m.col(a * 5 + 4).setConstant(-15.0);
    if (s == p.scale) {
      const int row = p.row * g + p.col;
      auto logit = [](double prob) {
        prob = std::clamp(prob, 1e-12, 1.0 - 1e-12);
        return std::log(prob / (1.0 - prob));
      };
      m(row, p.anchor * 5 + 0) = logit(t.cx);
      m(row, p.anchor * 5 + 1) = logit(t.cy);
      m(row, p.anchor * 5 + 2) = t.tw;
      m(row, p.anchor * 5 + 3) = t.th;
      m(row, p.anchor * 5 + 4) = 15.0;
    }
    raw.emplace_back(m);
  }
  return raw;
}

TEST_CASE("perfect predictions give near-zero grounding loss") {
  const AnchorSet anchors = DefaultAnchors();
  const BBox gold{40, 60, 120, 180};
  const QgLoss loss = ComputeQgLoss(PerfectFit(anchors, gold), gold, anchors);
  CHECK(loss.bbox.scalar() < 1e-20);
  // 4032 saturated logits at +-15 contribute about 4032 * 3.06e-7.
  CHECK(loss.object.scalar() < 1.3e-3);
  CHECK(loss.total.scalar() >= 0.0);
}

TEST_CASE("objectness loss on a toy grid is below 1e-5 when saturated") {
  ScaleGeometry g;
  g.grid = 1;
  g.stride = 256;
  g.anchors = {{AnchorPrior{64, 64}, AnchorPrior{128, 128}, AnchorPrior{256, 256}}};
  const AnchorSet anchors({g});
  const BBox gold{60, 60, 190, 190};
  const QgLoss loss = ComputeQgLoss(PerfectFit(anchors, gold), gold, anchors);
  CHECK(loss.bbox.scalar() < 1e-20);
  CHECK(loss.object.scalar() < 1e-5);
}

TEST_CASE("box loss is zero only at the encoded targets") {
  const AnchorSet anchors = DefaultAnchors();
  const BBox gold{10, 10, 60, 90};
  std::vector<Var> raw = PerfectFit(anchors, gold);
  const AnchorIndex p = PositiveAnchor(gold, anchors);
  const int g = anchors.scale(p.scale).grid;
  raw[p.scale].mutable_value()(p.row * g + p.col, p.anchor * 5 + 2) += 0.1;
  const QgLoss loss = ComputeQgLoss(raw, gold, anchors);
  CHECK(loss.bbox.scalar() == doctest::Approx(0.01 / 4.0));
}

TEST_CASE("grounding loss gradients on a 2x2 grid") {
  std::vector<ScaleGeometry> scales(2);
  scales[0] = {1, 256.0, {{{160, 200}, {200, 160}, {256, 256}}}};
  scales[1] = {2, 128.0, {{{40, 40}, {80, 60}, {60, 80}}}};
  const AnchorSet anchors(scales);
  std::mt19937_64 rng(5);
  const BBox gold{30, 150, 110, 230};
  CHECK(testing::GradCheck(
            [&](const std::vector<Var>& v) {
              return ComputeQgLoss(v, gold, anchors).total;
            },
            {RandomMatrix(1, 15, rng), RandomMatrix(4, 15, rng)}) < 1e-6);
}

TEST_CASE("fuse spatial matches a per-location oracle") {
  ModelConfig cfg;
  cfg.hidden = 4;
  nn::ParamStore store;
  std::mt19937_64 rng(6);
  GroundingHead head(store, cfg, rng);
  store.Get("grounding.fuse.bias").mutable_value() = RandomMatrix(1, 4, rng);
  const Matrix q = RandomMatrix(1, 4, rng);
  const Matrix u = RandomMatrix(4, 4, rng);  // a 2x2 grid
  const std::vector<Var> maps = {Var(u)};
  const Matrix fused = head.FuseSpatial(Var(q), maps)[0].value();
  const Matrix w = store.Get("grounding.fuse.weight").value();
  const Matrix b = store.Get("grounding.fuse.bias").value();
  for (int loc = 0; loc < 4; ++loc) {
    Matrix cat(1, 8);
    cat << u.row(loc), q;
    const Matrix expected = (cat * w + b).cwiseMax(0.0);
    CHECK((fused.row(loc) - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("zero query with identity visual half passes the grid through") {
  ModelConfig cfg;
  cfg.hidden = 4;
  nn::ParamStore store;
  std::mt19937_64 rng(7);
  GroundingHead head(store, cfg, rng);
  Matrix w = RandomMatrix(8, 4, rng);
  w.topRows(4) = Matrix::Identity(4, 4);
  store.Get("grounding.fuse.weight").mutable_value() = w;
  const Matrix u = RandomMatrix(16, 4, rng).cwiseAbs();  // post-ReLU features
  const std::vector<Var> maps = {Var(u)};
  const Matrix fused = head.FuseSpatial(Var(Matrix::Zero(1, 4)), maps)[0].value();
  CHECK((fused - u).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("prediction shapes and zero propagation") {
  ModelConfig cfg;
  cfg.hidden = 8;
  nn::ParamStore store;
  std::mt19937_64 rng(8);
  GroundingHead head(store, cfg, rng);
  std::vector<Var> fused = {Var(Matrix::Zero(64, 8)), Var(Matrix::Zero(256, 8)),
                            Var(Matrix::Zero(1024, 8))};
  store.Get("grounding.predict.bias").mutable_value().setZero();
  const auto raw = head.PredictOffsets(fused);
  REQUIRE(raw.size() == 3);
  CHECK(raw[0].rows() == 64);
  CHECK(raw[0].cols() == 15);
  for (const Var& r : raw) CHECK(r.value().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("objectness bias starts low") {
  ModelConfig cfg;
  cfg.hidden = 8;
  nn::ParamStore store;
  std::mt19937_64 rng(9);
  GroundingHead head(store, cfg, rng);
  const Matrix b = store.Get("grounding.predict.bias").value();
  for (int a = 0; a < 3; ++a) CHECK(b(0, a * 5 + 4) == doctest::Approx(-4.6));
  CHECK(b(0, 0) == 0.0);
}

TEST_CASE("grounding head gradients") {
  ModelConfig cfg;
  cfg.hidden = 4;
  nn::ParamStore store;
  std::mt19937_64 rng(10);
  GroundingHead head(store, cfg, rng);
  std::vector<ScaleGeometry> scales(2);
  scales[0] = {1, 256.0, {{{160, 200}, {200, 160}, {256, 256}}}};
  scales[1] = {2, 128.0, {{{40, 40}, {80, 60}, {60, 80}}}};
  const AnchorSet anchors(scales);
  const BBox gold{100, 20, 200, 120};
  const Matrix q = RandomMatrix(1, 4, rng);
  const Matrix u0 = RandomMatrix(1, 4, rng);
  const Matrix u1 = RandomMatrix(4, 4, rng);
  auto loss = [&](const Var& qv, const Var& a, const Var& b) {
    const std::vector<Var> maps = {a, b};
    return ComputeQgLoss(head.PredictOffsets(head.FuseSpatial(qv, maps)), gold,
                         anchors)
        .total;
  };
  CHECK(testing::GradCheck(
            [&](const std::vector<Var>& v) { return loss(v[0], v[1], v[2]); },
            {q, u0, u1}) < 1e-6);
  CHECK(testing::ParamGradCheck(
            store,
            {"grounding.fuse.weight", "grounding.fuse.bias",
             "grounding.predict.weight", "grounding.predict.bias"},
            [&] { return loss(Var(q), Var(u0), Var(u1)); }) < 1e-6);
}

TEST_CASE("k-means anchor priors recover planted clusters") {
  std::vector<BBox> boxes;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> jitter(0.0, 0.5);
  const double sizes[9] = {8, 16, 24, 40, 56, 72, 100, 150, 220};
  for (double s : sizes) {
    for (int k = 0; k < 10; ++k) {
      const double w = s + jitter(rng), h = s + jitter(rng);
      boxes.push_back({0, 0, w, h});
    }
  }
  const auto priors = EstimateAnchorPriors(boxes, 1, 100);
  for (int k = 0; k < 8; ++k) {
    CHECK(priors[k].width * priors[k].height >=
          priors[k + 1].width * priors[k + 1].height);
  }
  CHECK(priors[0].width == doctest::Approx(220).epsilon(0.05));
  CHECK(priors[8].width == doctest::Approx(8).epsilon(0.1));
  CHECK_THROWS_AS(EstimateAnchorPriors(std::span(boxes).first(5), 1), Error);
}

}  // namespace
}  // namespace spanground
