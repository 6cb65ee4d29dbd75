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

#ifndef SPANGROUND_ENCODERS_IMAGE_ENCODER_H_
#define SPANGROUND_ENCODERS_IMAGE_ENCODER_H_

#include <array>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "core/model_config.h"
#include "nn/layers.h"

namespace spanground {

// RGB image as an (height*width) x 3 matrix, rows in row-major pixel order,
// values in [0, 1].
struct ImageTensor {
  int height = 0;
  int width = 0;
  nn::Matrix pixels;
};

// Channel-major feature map, the layout convolutional backbones emit.
struct FeatureGrid {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;  // [channel][y][x]

  bool operator==(const FeatureGrid&) const = default;
};

// (height*width) x channels, row index y*width + x.
nn::Matrix FlattenGrid(const FeatureGrid& grid);
FeatureGrid UnflattenGrid(const nn::Matrix& rows, int height, int width);

// Three projected scale maps, coarse first: maps[0] is 8x8 (64 rows),
// maps[1] is 16x16 (256 rows), maps[2] is 32x32 (1024 rows) for a 256 input.
struct VisualPyramid {
  std::array<nn::Var, 3> maps;
  std::array<int, 3> grid = {8, 16, 32};
};

// Contract for visual backbones: given an input_size x input_size image,
// return flattened maps at strides 32, 16 and 8 with channels() columns.
class VisualBackbone {
 public:
  virtual ~VisualBackbone() = default;
  virtual int input_size() const = 0;
  virtual std::array<int, 3> channels() const = 0;
  virtual std::array<nn::Var, 3> Extract(const ImageTensor& image,
                                         bool training) = 0;
};

using VisualBackboneFactory = std::function<std::unique_ptr<VisualBackbone>(
    nn::ParamStore&, const ModelConfig&, std::mt19937_64&)>;

void RegisterVisualBackbone(const std::string& name,
                            VisualBackboneFactory factory);
std::unique_ptr<VisualBackbone> MakeVisualBackbone(const std::string& name,
                                                   nn::ParamStore& store,
                                                   const ModelConfig& config,
                                                   std::mt19937_64& rng);

// Three strided convolutions with ReLU: an 8x8 stride-8 patchify stage
// producing the fine map, then two 3x3 stride-2 stages. Two residual 3x3
// convolutions add context on the coarse map, and a top-down path adds
// ReLU(1x1 conv) of each coarser map, upsampled 2x, to the next finer one.
class ReferenceVisualBackbone : public VisualBackbone {
 public:
  ReferenceVisualBackbone(nn::ParamStore& store, const ModelConfig& config,
                          std::mt19937_64& rng, int input_size = 256);

  int input_size() const override { return input_size_; }
  std::array<int, 3> channels() const override { return channels_; }
  std::array<nn::Var, 3> Extract(const ImageTensor& image,
                                 bool training) override;

  const nn::Linear& stage(int i) const { return stages_[i]; }

 private:
  int input_size_;
  std::array<int, 3> channels_;
  std::array<nn::Linear, 3> stages_;  // patchify, then the two 3x3 stages
  std::array<nn::Linear, 2> context_;
  std::array<nn::Linear, 2> lateral_;  // [0] mid -> fine, [1] coarse -> mid
};

// Backbone plus a per-scale 1x1 convolution, batch norm and ReLU to d
// channels, followed by dropout.
class ImageEncoder {
 public:
  ImageEncoder(nn::ParamStore& store, const ModelConfig& config,
               std::unique_ptr<VisualBackbone> backbone, std::mt19937_64& rng);

  // Batch statistics are taken over every location of every image.
  std::vector<VisualPyramid> Encode(std::span<const ImageTensor> images,
                                    bool training, std::mt19937_64& rng);
  VisualPyramid Encode(const ImageTensor& image, bool training,
                       std::mt19937_64& rng);

  VisualBackbone& backbone() { return *backbone_; }

 private:
  std::unique_ptr<VisualBackbone> backbone_;
  std::array<nn::Linear, 3> projections_;
  std::array<nn::Var, 3> bn_gamma_;
  std::array<nn::Var, 3> bn_beta_;
  std::array<nn::BatchNormStats*, 3> bn_stats_;
  double dropout_;
};

}  // namespace spanground

#endif  // SPANGROUND_ENCODERS_IMAGE_ENCODER_H_
