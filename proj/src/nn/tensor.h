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

#ifndef SPANGROUND_NN_TENSOR_H_
#define SPANGROUND_NN_TENSOR_H_

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace spanground {
namespace nn {

// All model math is carried out in 64-bit. Matrices are row-major so that a
// flattened H x W feature map with C channels is simply an (H*W) x C matrix.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into the parents.
  std::function<void(Node&)> backward;

  void AccumulateGrad(const Matrix& g);
};

// A handle to a node in the computation graph. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(Matrix value, bool requires_grad = false);

  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  // Gradient sized like value(); zeros if nothing has been accumulated.
  Matrix grad() const;
  void ZeroGrad() { node_->grad.resize(0, 0); }

  bool requires_grad() const { return node_->requires_grad; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double scalar() const { return node_->value(0, 0); }
  bool defined() const { return node_ != nullptr; }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool GradEnabled();

// Runs reverse-mode accumulation from a 1x1 root.
void Backward(const Var& root);

}  // namespace nn
}  // namespace spanground

#endif  // SPANGROUND_NN_TENSOR_H_
