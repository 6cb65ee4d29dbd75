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

#ifndef SPANGROUND_NN_LAYERS_H_
#define SPANGROUND_NN_LAYERS_H_

#include <map>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "nn/ops.h"

namespace spanground {
namespace nn {

// Named, ordered registry of trainable parameters and non-trainable buffers.
// Names are stable across runs and are what checkpoints key on.
class ParamStore {
 public:
  Var Create(const std::string& name, Matrix init);
  BatchNormStats& CreateBuffer(const std::string& name, Eigen::Index cols);

  Var Get(const std::string& name) const;
  BatchNormStats& GetBuffer(const std::string& name);

  const std::vector<std::pair<std::string, Var>>& params() const {
    return params_;
  }
  const std::map<std::string, std::unique_ptr<BatchNormStats>>& buffers()
      const {
    return buffers_;
  }

  void ZeroGrad();
  size_t ScalarCount() const;

 private:
  std::vector<std::pair<std::string, Var>> params_;
  std::map<std::string, size_t> index_;
  std::map<std::string, std::unique_ptr<BatchNormStats>> buffers_;
};

Matrix XavierUniform(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng);
Matrix NormalInit(Eigen::Index rows, Eigen::Index cols, double stddev,
                  std::mt19937_64& rng);

struct Linear {
  Var weight;  // in x out
  Var bias;    // 1 x out, undefined when built without bias

  static Linear Create(ParamStore& store, const std::string& name,
                       Eigen::Index in, Eigen::Index out, std::mt19937_64& rng,
                       bool with_bias = true);
  Var Forward(const Var& x) const;
};

struct LayerNorm {
  Var gamma;
  Var beta;

  static LayerNorm Create(ParamStore& store, const std::string& name,
                          Eigen::Index dim);
  Var Forward(const Var& x) const { return LayerNormRows(x, gamma, beta); }
};

// Keys/values after projection, reusable across many queries.
struct ProjectedKeys {
  Var keys;
  Var values;
};

// Scaled dot-product attention with h heads. Each head owns a d/h column
// slice of the query/key/value projections; heads are concatenated with no
// output projection.
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ParamStore& store, const std::string& name, int dim,
                     int heads, std::mt19937_64& rng);

  ProjectedKeys Project(const Var& key_value_rows) const;
  // When `weights` is non-null it receives one row-stochastic matrix per head.
  Var Attend(const Var& query_rows, const ProjectedKeys& kv,
             std::vector<Matrix>* weights = nullptr) const;
  Var Forward(const Var& query_rows, const Var& key_value_rows,
              std::vector<Matrix>* weights = nullptr) const {
    return Attend(query_rows, Project(key_value_rows), weights);
  }

  int heads() const { return heads_; }
  int dim() const { return dim_; }
  const Var& wq() const { return wq_; }
  const Var& wk() const { return wk_; }
  const Var& wv() const { return wv_; }

 private:
  int dim_ = 0;
  int heads_ = 1;
  Var wq_, wk_, wv_;
};

// Decoupled weight decay Adam. Decay applies to matrices with more than one
// row; bias and normalization vectors are not decayed.
class AdamW {
 public:
  struct Options {
    double lr = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
  };

  AdamW(const ParamStore& store, Options options);

  void Step(double lr);
  long step_count() const { return step_; }

  // Moments in parameter order, for checkpointing.
  std::vector<Matrix>& first_moments() { return m_; }
  std::vector<Matrix>& second_moments() { return v_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }
  void set_step_count(long s) { step_ = s; }

 private:
  std::vector<Var> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  Options options_;
  long step_ = 0;
};

}  // namespace nn
}  // namespace spanground

#endif  // SPANGROUND_NN_LAYERS_H_
