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

// Differentiable operations over Var. Every op records its backward closure
// only when at least one input requires a gradient and recording is enabled.

#ifndef SPANGROUND_NN_OPS_H_
#define SPANGROUND_NN_OPS_H_

#include <random>
#include <span>
#include <vector>

#include "nn/tensor.h"

namespace spanground {
namespace nn {

Var Constant(Matrix value);

Var MatMul(const Var& a, const Var& b);
Var Add(const Var& a, const Var& b);
// a (r x n) + row (1 x n) added to every row.
Var AddRow(const Var& a, const Var& row);
// Repeats a 1 x n row r times.
Var BroadcastRows(const Var& row, Eigen::Index r);
Var Scale(const Var& a, double s);
Var Transpose(const Var& a);
Var Sum(const Var& a);
// Elementwise mean of equally shaped inputs.
Var Mean(std::span<const Var> inputs);

Var Relu(const Var& a);
Var Tanh(const Var& a);
Var Sigmoid(const Var& a);
Var SoftmaxRows(const Var& a);

Var ConcatCols(std::span<const Var> parts);
Var ConcatRows(std::span<const Var> parts);
Var SliceRows(const Var& a, Eigen::Index begin, Eigen::Index count);
Var SliceCols(const Var& a, Eigen::Index begin, Eigen::Index count);
// Rows of `table` selected by `ids` (embedding lookup).
Var GatherRows(const Var& table, std::span<const int> ids);

// Per-row normalization to zero mean / unit variance then affine.
Var LayerNormRows(const Var& a, const Var& gamma, const Var& beta,
                  double eps = 1e-12);

struct BatchNormStats {
  Matrix running_mean;  // 1 x C
  Matrix running_var;   // 1 x C
};

// Per-column normalization over all rows. In training mode uses the batch
// statistics and updates `stats`; otherwise uses the running estimates.
Var BatchNormCols(const Var& a, const Var& gamma, const Var& beta,
                  BatchNormStats& stats, bool training, double momentum = 0.1,
                  double eps = 1e-5);

// Inverted dropout; identity when !training or rate == 0.
Var Dropout(const Var& a, double rate, bool training, std::mt19937_64& rng);

// Patch extraction for convolution. `a` is an (height*width) x channels map,
// rows in row-major spatial order. Output rows follow the output grid in
// row-major order; columns are (ky, kx, channel) with channel fastest.
Var Im2Col(const Var& a, int height, int width, int kernel, int stride,
           int pad);

// Nearest-neighbour 2x upsampling of an (height*width) x channels map.
Var Upsample2x(const Var& a, int height, int width);

// Sum over rows with mask[r] != 0 of -log softmax(logits[r])[labels[r]].
Var CrossEntropyRows(const Var& logits, std::span<const int> labels,
                     std::span<const double> mask);

// Sum of binary cross-entropy with logits; targets in [0,1].
Var BceWithLogitsSum(const Var& logits, const Matrix& targets);

// Mean of squared differences.
Var MeanSquaredError(const Var& a, const Matrix& target);

}  // namespace nn
}  // namespace spanground

#endif  // SPANGROUND_NN_OPS_H_
