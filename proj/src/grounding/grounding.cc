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

#include "grounding/grounding.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "core/error.h"

namespace spanground {

namespace {

constexpr double kMinBoxSide = 1e-3;

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Clips [lo, hi] into the frame and keeps at least kMinBoxSide of extent.
void ClipInterval(double& lo, double& hi) {
  lo = std::clamp(lo, 0.0, kFrameSize);
  hi = std::clamp(hi, 0.0, kFrameSize);
  if (hi - lo < kMinBoxSide) {
    if (lo + kMinBoxSide <= kFrameSize) {
      hi = lo + kMinBoxSide;
    } else {
      lo = hi - kMinBoxSide;
    }
  }
}

}  // namespace

AnchorSet::AnchorSet(std::vector<ScaleGeometry> scales)
    : scales_(std::move(scales)) {
  if (scales_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "anchor set needs a scale");
  }
  for (const ScaleGeometry& s : scales_) {
    if (s.grid <= 0 || s.stride <= 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "invalid scale geometry");
    }
    offsets_.push_back(total_locations_ * kAnchorsPerCell);
    total_locations_ += s.grid * s.grid;
  }
}

AnchorSet AnchorSet::Standard(const std::array<AnchorPrior, 9>& priors) {
  std::vector<ScaleGeometry> scales;
  const int grids[3] = {8, 16, 32};
  for (int i = 0; i < 3; ++i) {
    ScaleGeometry g;
    g.grid = grids[i];
    g.stride = kFrameSize / grids[i];
    for (int a = 0; a < kAnchorsPerCell; ++a) g.anchors[a] = priors[i * 3 + a];
    scales.push_back(g);
  }
  return AnchorSet(std::move(scales));
}

int AnchorSet::Flatten(const AnchorIndex& index) const {
  const ScaleGeometry& s = scales_[index.scale];
  return offsets_[index.scale] +
         ((index.row * s.grid + index.col) * kAnchorsPerCell + index.anchor);
}

AnchorIndex AnchorSet::Unflatten(int flat) const {
  if (flat < 0 || flat >= total_anchors()) {
    throw Error(ErrorCode::kInvalidArgument, "anchor index out of range");
  }
  int scale = scale_count() - 1;
  while (offsets_[scale] > flat) --scale;
  const int local = flat - offsets_[scale];
  const int cell = local / kAnchorsPerCell;
  const int grid = scales_[scale].grid;
  return {scale, cell / grid, cell % grid, local % kAnchorsPerCell};
}

BBox AnchorSet::NeutralBox(const AnchorIndex& index) const {
  const ScaleGeometry& s = scales_[index.scale];
  return DecodeBox({}, s.anchors[index.anchor], index.row, index.col, s.stride);
}

BBox DecodeBox(const BoxOffsets& t, const AnchorPrior& prior, int row, int col,
               double stride) {
  const double cx = (col + Sigmoid(t.tx)) * stride;
  const double cy = (row + Sigmoid(t.ty)) * stride;
  const double w = prior.width * std::exp(t.tw);
  const double h = prior.height * std::exp(t.th);
  BBox b{cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
  ClipInterval(b.x1, b.x2);
  ClipInterval(b.y1, b.y2);
  return b;
}

BoxTargets EncodeTargets(const BBox& gold, const AnchorSet& anchors,
                         const AnchorIndex& index) {
  const ScaleGeometry& s = anchors.scale(index.scale);
  const AnchorPrior& prior = s.anchors[index.anchor];
  BoxTargets t;
  t.cx = std::clamp((gold.x1 + gold.x2) / 2 / s.stride - index.col, 0.0, 1.0);
  t.cy = std::clamp((gold.y1 + gold.y2) / 2 / s.stride - index.row, 0.0, 1.0);
  t.tw = std::clamp(std::log(gold.width() / prior.width), -4.0, 4.0);
  t.th = std::clamp(std::log(gold.height() / prior.height), -4.0, 4.0);
  return t;
}

AnchorIndex PositiveAnchor(const BBox& gold, const AnchorSet& anchors) {
  int best = 0;
  double best_iou = -1.0;
  for (int flat = 0; flat < anchors.total_anchors(); ++flat) {
    const double iou = Iou(anchors.NeutralBox(anchors.Unflatten(flat)), gold);
    if (iou > best_iou) {
      best_iou = iou;
      best = flat;
    }
  }
  return anchors.Unflatten(best);
}

SelectedBox SelectBox(std::span<const nn::Matrix> raw,
                      const AnchorSet& anchors) {
  if (static_cast<int>(raw.size()) != anchors.scale_count()) {
    throw Error(ErrorCode::kInvalidArgument,
                "prediction scale count does not match the anchor set");
  }
  // Comparing logits rather than sigmoids keeps the argmax exact where the
  // sigmoid saturates.
  double best_logit = -std::numeric_limits<double>::infinity();
  AnchorIndex best;
  bool found = false;
  for (int s = 0; s < anchors.scale_count(); ++s) {
    const int grid = anchors.scale(s).grid;
    for (int row = 0; row < grid; ++row) {
      for (int col = 0; col < grid; ++col) {
        for (int a = 0; a < kAnchorsPerCell; ++a) {
          const double logit =
              raw[s](row * grid + col, a * kValuesPerAnchor + 4);
          if (!found || logit > best_logit) {
            best_logit = logit;
            best = {s, row, col, a};
            found = true;
          }
        }
      }
    }
  }
  const ScaleGeometry& g = anchors.scale(best.scale);
  const auto cell = raw[best.scale].row(best.row * g.grid + best.col);
  const int base = best.anchor * kValuesPerAnchor;
  BoxOffsets t{cell(base), cell(base + 1), cell(base + 2), cell(base + 3)};
  return {DecodeBox(t, g.anchors[best.anchor], best.row, best.col, g.stride),
          Sigmoid(best_logit), best};
}

QgLoss ComputeQgLoss(std::span<const nn::Var> raw, const BBox& gold,
                     const AnchorSet& anchors) {
  if (static_cast<int>(raw.size()) != anchors.scale_count()) {
    throw Error(ErrorCode::kInvalidArgument,
                "prediction scale count does not match the anchor set");
  }
  QgLoss loss;
  loss.positive = PositiveAnchor(gold, anchors);
  const AnchorIndex& p = loss.positive;
  const int grid = anchors.scale(p.scale).grid;

  nn::Var at = nn::SliceCols(nn::SliceRows(raw[p.scale], p.row * grid + p.col, 1),
                             p.anchor * kValuesPerAnchor, 4);
  std::vector<nn::Var> parts = {nn::Sigmoid(nn::SliceCols(at, 0, 2)),
                                nn::SliceCols(at, 2, 2)};
  const BoxTargets t = EncodeTargets(gold, anchors, p);
  nn::Matrix target(1, 4);
  target << t.cx, t.cy, t.tw, t.th;
  loss.bbox = nn::MeanSquaredError(nn::ConcatCols(parts), target);

  for (int s = 0; s < anchors.scale_count(); ++s) {
    const int r = anchors.scale(s).grid;
    std::vector<nn::Var> logits;
    for (int a = 0; a < kAnchorsPerCell; ++a) {
      logits.push_back(nn::SliceCols(raw[s], a * kValuesPerAnchor + 4, 1));
    }
    nn::Matrix targets = nn::Matrix::Zero(r * r, kAnchorsPerCell);
    if (s == p.scale) targets(p.row * r + p.col, p.anchor) = 1.0;
    nn::Var term = nn::BceWithLogitsSum(nn::ConcatCols(logits), targets);
    loss.object = loss.object.defined() ? nn::Add(loss.object, term) : term;
  }
  loss.total = nn::Add(loss.bbox, loss.object);
  return loss;
}

GroundingHead::GroundingHead(nn::ParamStore& store, const ModelConfig& config,
                             std::mt19937_64& rng)
    : dim_(config.hidden) {
  fuse_weight_ = store.Create("grounding.fuse.weight",
                              nn::XavierUniform(2 * dim_, dim_, rng));
  fuse_bias_ = store.Create("grounding.fuse.bias", nn::Matrix::Zero(1, dim_));
  predictor_ = nn::Linear::Create(store, "grounding.predict", dim_,
                                  kPredictionChannels, rng);
  // Objectness starts near p = 0.01 so the summed BCE over thousands of
  // negatives does not dominate the first steps.
  for (int a = 0; a < kAnchorsPerCell; ++a) {
    predictor_.bias.mutable_value()(0, a * kValuesPerAnchor + 4) = -4.6;
  }
}

std::vector<nn::Var> GroundingHead::ProjectVisual(
    std::span<const nn::Var> maps) const {
  nn::Var visual_half = nn::SliceRows(fuse_weight_, 0, dim_);
  std::vector<nn::Var> out;
  for (const nn::Var& m : maps) out.push_back(nn::MatMul(m, visual_half));
  return out;
}

std::vector<nn::Var> GroundingHead::FuseProjected(
    const nn::Var& q, std::span<const nn::Var> projected) const {
  nn::Var query_part = nn::AddRow(
      nn::MatMul(q, nn::SliceRows(fuse_weight_, dim_, dim_)), fuse_bias_);
  std::vector<nn::Var> out;
  for (const nn::Var& p : projected) {
    out.push_back(nn::Relu(nn::AddRow(p, query_part)));
  }
  return out;
}

std::vector<nn::Var> GroundingHead::PredictOffsets(
    std::span<const nn::Var> fused) const {
  std::vector<nn::Var> out;
  for (const nn::Var& f : fused) out.push_back(predictor_.Forward(f));
  return out;
}

std::array<AnchorPrior, 9> EstimateAnchorPriors(std::span<const BBox> boxes,
                                                unsigned long long seed,
                                                int iterations) {
  if (boxes.size() < 9) {
    throw Error(ErrorCode::kDataError,
                "anchor estimation needs at least 9 boxes");
  }
  auto shape_iou = [](const AnchorPrior& a, const AnchorPrior& b) {
    const double inter = std::min(a.width, b.width) * std::min(a.height, b.height);
    return inter / (a.width * a.height + b.width * b.height - inter);
  };
  std::vector<AnchorPrior> shapes;
  for (const BBox& b : boxes) shapes.push_back({b.width(), b.height()});

  // k-means++ seeding under the 1 - IoU distance, best of a few restarts.
  std::mt19937_64 rng(seed);
  std::array<AnchorPrior, 9> best_centers{};
  double best_fit = -1.0;
  for (int restart = 0; restart < 5; ++restart) {
    std::array<AnchorPrior, 9> centers;
    std::uniform_int_distribution<size_t> pick(0, shapes.size() - 1);
    centers[0] = shapes[pick(rng)];
    std::vector<double> dist(shapes.size());
    for (int k = 1; k < 9; ++k) {
      for (size_t i = 0; i < shapes.size(); ++i) {
        double nearest = 1.0;
        for (int j = 0; j < k; ++j) {
          nearest = std::min(nearest, 1.0 - shape_iou(shapes[i], centers[j]));
        }
        dist[i] = nearest * nearest;
      }
      std::discrete_distribution<size_t> weighted(dist.begin(), dist.end());
      centers[k] = shapes[weighted(rng)];
    }

    std::vector<int> assign(shapes.size(), -1);
    for (int it = 0; it < iterations; ++it) {
      bool changed = false;
      for (size_t i = 0; i < shapes.size(); ++i) {
        int best = 0;
        for (int k = 1; k < 9; ++k) {
          if (shape_iou(shapes[i], centers[k]) >
              shape_iou(shapes[i], centers[best])) {
            best = k;
          }
        }
        if (assign[i] != best) {
          assign[i] = best;
          changed = true;
        }
      }
      for (int k = 0; k < 9; ++k) {
        double w = 0, h = 0;
        int n = 0;
        for (size_t i = 0; i < shapes.size(); ++i) {
          if (assign[i] != k) continue;
          w += shapes[i].width;
          h += shapes[i].height;
          ++n;
        }
        if (n > 0) centers[k] = {w / n, h / n};
      }
      if (!changed) break;
    }
    double fit = 0.0;
    for (size_t i = 0; i < shapes.size(); ++i) {
      fit += shape_iou(shapes[i], centers[assign[i]]);
    }
    if (fit > best_fit) {
      best_fit = fit;
      best_centers = centers;
    }
  }
  std::array<AnchorPrior, 9> centers = best_centers;
  std::sort(centers.begin(), centers.end(),
            [](const AnchorPrior& a, const AnchorPrior& b) {
              return a.width * a.height > b.width * b.height;
            });
  return centers;
}

}  // namespace spanground
