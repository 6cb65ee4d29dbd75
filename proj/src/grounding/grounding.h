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

#ifndef SPANGROUND_GROUNDING_GROUNDING_H_
#define SPANGROUND_GROUNDING_GROUNDING_H_

#include <array>
#include <random>
#include <span>
#include <vector>

#include "core/model_config.h"
#include "core/types.h"
#include "nn/layers.h"

namespace spanground {

inline constexpr int kAnchorsPerCell = 3;
// (t_x, t_y, t_w, t_h, objectness) per anchor.
inline constexpr int kValuesPerAnchor = 5;
inline constexpr int kPredictionChannels = kAnchorsPerCell * kValuesPerAnchor;

struct ScaleGeometry {
  int grid = 0;         // r, the map is r x r
  double stride = 0.0;  // frame pixels per cell
  std::array<AnchorPrior, kAnchorsPerCell> anchors;
};

// Flat anchor order is (scale, row, col, anchor), scale-major; ties in
// selection and matching resolve to the lowest flat index.
struct AnchorIndex {
  int scale = 0;
  int row = 0;
  int col = 0;
  int anchor = 0;
  bool operator==(const AnchorIndex&) const = default;
};

class AnchorSet {
 public:
  explicit AnchorSet(std::vector<ScaleGeometry> scales);
  // 8x8, 16x16 and 32x32 grids over the 256 frame with priors[0..2] on the
  // coarse grid, priors[3..5] on 16x16 and priors[6..8] on the fine grid.
  static AnchorSet Standard(const std::array<AnchorPrior, 9>& priors);

  int scale_count() const { return static_cast<int>(scales_.size()); }
  const ScaleGeometry& scale(int i) const { return scales_[i]; }
  int total_locations() const { return total_locations_; }
  int total_anchors() const { return total_locations_ * kAnchorsPerCell; }

  int Flatten(const AnchorIndex& index) const;
  AnchorIndex Unflatten(int flat) const;
  // Box decoded from zero offsets: the prior centered on its cell.
  BBox NeutralBox(const AnchorIndex& index) const;

 private:
  std::vector<ScaleGeometry> scales_;
  std::vector<int> offsets_;  // flat anchor offset of each scale
  int total_locations_ = 0;
};

struct BoxOffsets {
  double tx = 0.0;
  double ty = 0.0;
  double tw = 0.0;
  double th = 0.0;
};

// center = (cell + sigmoid(t)) * stride, size = prior * exp(t), clipped to
// the frame.
BBox DecodeBox(const BoxOffsets& t, const AnchorPrior& prior, int row, int col,
               double stride);

// Regression targets at an anchor, in the space the box loss compares:
// (sigmoid(t_x), sigmoid(t_y), t_w, t_h). Center targets are clamped to
// [0, 1] and size targets to [-4, 4].
struct BoxTargets {
  double cx = 0.5;
  double cy = 0.5;
  double tw = 0.0;
  double th = 0.0;
};
BoxTargets EncodeTargets(const BBox& gold, const AnchorSet& anchors,
                         const AnchorIndex& index);

// Anchor whose neutral box has the highest IoU with `gold`.
AnchorIndex PositiveAnchor(const BBox& gold, const AnchorSet& anchors);

struct SelectedBox {
  BBox box;
  double confidence = 0.0;
  AnchorIndex index;
};

// `raw[s]` is (r*r) x 15 for scale s. Picks the highest objectness over all
// anchors and decodes it.
SelectedBox SelectBox(std::span<const nn::Matrix> raw, const AnchorSet& anchors);

struct QgLoss {
  nn::Var total;   // bbox + object
  nn::Var bbox;    // mean squared error over the four targets
  nn::Var object;  // summed BCE over every objectness logit
  AnchorIndex positive;
};

QgLoss ComputeQgLoss(std::span<const nn::Var> raw, const BBox& gold,
                     const AnchorSet& anchors);

// Broadcast-concat fusion of the query with each map, then the 1x1
// prediction convolution.
class GroundingHead {
 public:
  GroundingHead(nn::ParamStore& store, const ModelConfig& config,
                std::mt19937_64& rng);

  // U W_u per map; depends only on the image.
  std::vector<nn::Var> ProjectVisual(std::span<const nn::Var> maps) const;
  // ReLU(conv1x1([U ; q])) = ReLU(U W_u + q W_q + b) at every location.
  std::vector<nn::Var> FuseProjected(const nn::Var& q,
                                     std::span<const nn::Var> projected) const;
  std::vector<nn::Var> FuseSpatial(const nn::Var& q,
                                   std::span<const nn::Var> maps) const {
    return FuseProjected(q, ProjectVisual(maps));
  }
  // One (r*r) x 15 tensor per scale.
  std::vector<nn::Var> PredictOffsets(std::span<const nn::Var> fused) const;

  const nn::Var& fuse_weight() const { return fuse_weight_; }  // 2d x d
  const nn::Var& fuse_bias() const { return fuse_bias_; }
  const nn::Linear& predictor() const { return predictor_; }

 private:
  int dim_;
  nn::Var fuse_weight_;
  nn::Var fuse_bias_;
  nn::Linear predictor_;
};

// k-means over (width, height) with 1 - IoU distance; returns priors sorted
// by area, largest first, so they map onto AnchorSet::Standard.
std::array<AnchorPrior, 9> EstimateAnchorPriors(std::span<const BBox> boxes,
                                                unsigned long long seed,
                                                int iterations = 50);

}  // namespace spanground

#endif  // SPANGROUND_GROUNDING_GROUNDING_H_
