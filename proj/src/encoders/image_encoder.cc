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

#include "encoders/image_encoder.h"

#include <map>
#include <mutex>

#include "core/error.h"

namespace spanground {

namespace {

std::map<std::string, VisualBackboneFactory>& Registry() {
  static std::map<std::string, VisualBackboneFactory> registry = {
      {"reference",
       [](nn::ParamStore& store, const ModelConfig& config,
          std::mt19937_64& rng) -> std::unique_ptr<VisualBackbone> {
         return std::make_unique<ReferenceVisualBackbone>(store, config, rng);
       }}};
  return registry;
}

std::mutex registry_mutex;

}  // namespace

nn::Matrix FlattenGrid(const FeatureGrid& grid) {
  nn::Matrix out(static_cast<Eigen::Index>(grid.height) * grid.width,
                 grid.channels);
  for (int c = 0; c < grid.channels; ++c) {
    for (int y = 0; y < grid.height; ++y) {
      for (int x = 0; x < grid.width; ++x) {
        out(static_cast<Eigen::Index>(y) * grid.width + x, c) =
            grid.data[(static_cast<size_t>(c) * grid.height + y) * grid.width +
                      x];
      }
    }
  }
  return out;
}

FeatureGrid UnflattenGrid(const nn::Matrix& rows, int height, int width) {
  if (rows.rows() != static_cast<Eigen::Index>(height) * width) {
    throw Error(ErrorCode::kInvalidArgument,
                "UnflattenGrid: row count does not match the grid");
  }
  FeatureGrid grid;
  grid.height = height;
  grid.width = width;
  grid.channels = static_cast<int>(rows.cols());
  grid.data.resize(static_cast<size_t>(rows.size()));
  for (int c = 0; c < grid.channels; ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        grid.data[(static_cast<size_t>(c) * height + y) * width + x] =
            rows(static_cast<Eigen::Index>(y) * width + x, c);
      }
    }
  }
  return grid;
}

void RegisterVisualBackbone(const std::string& name,
                            VisualBackboneFactory factory) {
  std::lock_guard<std::mutex> lock(registry_mutex);
  Registry()[name] = std::move(factory);
}

std::unique_ptr<VisualBackbone> MakeVisualBackbone(const std::string& name,
                                                   nn::ParamStore& store,
                                                   const ModelConfig& config,
                                                   std::mt19937_64& rng) {
  VisualBackboneFactory factory;
  {
    std::lock_guard<std::mutex> lock(registry_mutex);
    auto it = Registry().find(name);
    if (it == Registry().end()) {
      throw Error(ErrorCode::kNotFound,
                  "no visual backbone registered under '" + name +
                      "'; a pretrained adapter must be registered before use");
    }
    factory = it->second;
  }
  return factory(store, config, rng);
}

ReferenceVisualBackbone::ReferenceVisualBackbone(nn::ParamStore& store,
                                                 const ModelConfig& config,
                                                 std::mt19937_64& rng,
                                                 int input_size)
    : input_size_(input_size), channels_(config.visual_channels) {
  if (input_size % 32 != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "backbone input size must be a multiple of 32");
  }
  const int patch = 8;
  // Fine map (channels_[2]) first, then 16x16 (channels_[1]), then 8x8.
  stages_[0] = nn::Linear::Create(store, "visual.stage0", patch * patch * 3,
                                  channels_[2], rng);
  stages_[1] = nn::Linear::Create(store, "visual.stage1", 9 * channels_[2],
                                  channels_[1], rng);
  stages_[2] = nn::Linear::Create(store, "visual.stage2", 9 * channels_[1],
                                  channels_[0], rng);
  for (int i = 0; i < 2; ++i) {
    context_[i] = nn::Linear::Create(store, "visual.context" + std::to_string(i),
                                     9 * channels_[0], channels_[0], rng);
  }
  lateral_[0] = nn::Linear::Create(store, "visual.lateral0", channels_[1],
                                   channels_[2], rng);
  lateral_[1] = nn::Linear::Create(store, "visual.lateral1", channels_[0],
                                   channels_[1], rng);
}

std::array<nn::Var, 3> ReferenceVisualBackbone::Extract(const ImageTensor& image,
                                                        bool training) {
  (void)training;
  if (image.height != input_size_ || image.width != input_size_ ||
      image.pixels.rows() !=
          static_cast<Eigen::Index>(image.height) * image.width ||
      image.pixels.cols() != 3) {
    throw Error(ErrorCode::kInvalidArgument,
                "image must be " + std::to_string(input_size_) + "x" +
                    std::to_string(input_size_) + "x3, got " +
                    std::to_string(image.height) + "x" +
                    std::to_string(image.width));
  }
  const int patch = 8;
  const int fine_grid = input_size_ / 8;
  const int mid_grid = input_size_ / 16;
  nn::Var x = nn::Constant(image.pixels);
  nn::Var fine = nn::Relu(stages_[0].Forward(
      nn::Im2Col(x, input_size_, input_size_, patch, patch, 0)));
  nn::Var mid = nn::Relu(
      stages_[1].Forward(nn::Im2Col(fine, fine_grid, fine_grid, 3, 2, 1)));
  nn::Var coarse = nn::Relu(
      stages_[2].Forward(nn::Im2Col(mid, mid_grid, mid_grid, 3, 2, 1)));
  // Residual context on the coarse grid widens the receptive field; the
  // top-down path hands it to the finer maps.
  const int coarse_grid = input_size_ / 32;
  for (const nn::Linear& ctx : context_) {
    coarse = nn::Add(coarse, nn::Relu(ctx.Forward(nn::Im2Col(
                                 coarse, coarse_grid, coarse_grid, 3, 1, 1))));
  }
  mid = nn::Add(mid, nn::Upsample2x(nn::Relu(lateral_[1].Forward(coarse)),
                                    coarse_grid, coarse_grid));
  fine = nn::Add(fine, nn::Upsample2x(nn::Relu(lateral_[0].Forward(mid)),
                                      mid_grid, mid_grid));
  return {coarse, mid, fine};
}

ImageEncoder::ImageEncoder(nn::ParamStore& store, const ModelConfig& config,
                           std::unique_ptr<VisualBackbone> backbone,
                           std::mt19937_64& rng)
    : backbone_(std::move(backbone)), dropout_(config.dropout) {
  const std::array<int, 3> ch = backbone_->channels();
  for (int i = 0; i < 3; ++i) {
    const std::string p = "visual.proj" + std::to_string(i);
    projections_[i] =
        nn::Linear::Create(store, p, ch[i], config.hidden, rng, false);
    bn_gamma_[i] = store.Create(p + ".bn_gamma", nn::Matrix::Ones(1, config.hidden));
    bn_beta_[i] = store.Create(p + ".bn_beta", nn::Matrix::Zero(1, config.hidden));
    bn_stats_[i] = &store.CreateBuffer(p + ".bn", config.hidden);
  }
}

std::vector<VisualPyramid> ImageEncoder::Encode(
    std::span<const ImageTensor> images, bool training, std::mt19937_64& rng) {
  const int size = backbone_->input_size();
  const std::array<int, 3> grid = {size / 32, size / 16, size / 8};
  std::array<std::vector<nn::Var>, 3> per_scale;
  for (const ImageTensor& img : images) {
    std::array<nn::Var, 3> maps = backbone_->Extract(img, training);
    for (int i = 0; i < 3; ++i) {
      if (maps[i].rows() != static_cast<Eigen::Index>(grid[i]) * grid[i]) {
        throw Error(ErrorCode::kInternal, "backbone returned a wrong grid size");
      }
      per_scale[i].push_back(maps[i]);
    }
  }
  std::vector<VisualPyramid> out(images.size());
  for (int i = 0; i < 3; ++i) {
    nn::Var stacked = per_scale[i].size() == 1 ? per_scale[i][0]
                                               : nn::ConcatRows(per_scale[i]);
    nn::Var y = nn::Relu(nn::BatchNormCols(projections_[i].Forward(stacked),
                                           bn_gamma_[i], bn_beta_[i],
                                           *bn_stats_[i], training));
    y = nn::Dropout(y, dropout_, training, rng);
    const Eigen::Index rows = static_cast<Eigen::Index>(grid[i]) * grid[i];
    for (size_t k = 0; k < images.size(); ++k) {
      out[k].grid = grid;
      out[k].maps[i] = images.size() == 1
                           ? y
                           : nn::SliceRows(y, static_cast<Eigen::Index>(k) * rows,
                                           rows);
    }
  }
  return out;
}

VisualPyramid ImageEncoder::Encode(const ImageTensor& image, bool training,
                                   std::mt19937_64& rng) {
  return Encode(std::span<const ImageTensor>(&image, 1), training, rng)[0];
}

}  // namespace spanground
