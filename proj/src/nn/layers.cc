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

#include "nn/layers.h"

#include <cmath>
#include <stdexcept>

namespace spanground {
namespace nn {

Var ParamStore::Create(const std::string& name, Matrix init) {
  if (index_.count(name)) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  Var v(std::move(init), true);
  index_[name] = params_.size();
  params_.emplace_back(name, v);
  return v;
}

BatchNormStats& ParamStore::CreateBuffer(const std::string& name,
                                         Eigen::Index cols) {
  auto stats = std::make_unique<BatchNormStats>();
  stats->running_mean = Matrix::Zero(1, cols);
  stats->running_var = Matrix::Ones(1, cols);
  auto [it, inserted] = buffers_.emplace(name, std::move(stats));
  if (!inserted) throw std::invalid_argument("duplicate buffer name: " + name);
  return *it->second;
}

Var ParamStore::Get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter " + name);
  return params_[it->second].second;
}

BatchNormStats& ParamStore::GetBuffer(const std::string& name) {
  auto it = buffers_.find(name);
  if (it == buffers_.end()) throw std::out_of_range("no buffer " + name);
  return *it->second;
}

void ParamStore::ZeroGrad() {
  for (auto& [name, v] : params_) v.ZeroGrad();
}

size_t ParamStore::ScalarCount() const {
  size_t n = 0;
  for (const auto& [name, v] : params_) n += static_cast<size_t>(v.value().size());
  return n;
}

Matrix XavierUniform(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(in, out);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Matrix NormalInit(Eigen::Index rows, Eigen::Index cols, double stddev,
                  std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Linear Linear::Create(ParamStore& store, const std::string& name,
                      Eigen::Index in, Eigen::Index out, std::mt19937_64& rng,
                      bool with_bias) {
  Linear l;
  l.weight = store.Create(name + ".weight", XavierUniform(in, out, rng));
  if (with_bias) l.bias = store.Create(name + ".bias", Matrix::Zero(1, out));
  return l;
}

Var Linear::Forward(const Var& x) const {
  Var y = MatMul(x, weight);
  return bias.defined() ? AddRow(y, bias) : y;
}

LayerNorm LayerNorm::Create(ParamStore& store, const std::string& name,
                            Eigen::Index dim) {
  LayerNorm ln;
  ln.gamma = store.Create(name + ".gamma", Matrix::Ones(1, dim));
  ln.beta = store.Create(name + ".beta", Matrix::Zero(1, dim));
  return ln;
}

MultiHeadAttention::MultiHeadAttention(ParamStore& store,
                                       const std::string& name, int dim,
                                       int heads, std::mt19937_64& rng)
    : dim_(dim), heads_(heads) {
  if (heads <= 0 || dim % heads != 0) {
    throw std::invalid_argument(name + ": head count " +
                                std::to_string(heads) +
                                " must divide dimension " +
                                std::to_string(dim));
  }
  wq_ = store.Create(name + ".wq", XavierUniform(dim, dim, rng));
  wk_ = store.Create(name + ".wk", XavierUniform(dim, dim, rng));
  wv_ = store.Create(name + ".wv", XavierUniform(dim, dim, rng));
}

ProjectedKeys MultiHeadAttention::Project(const Var& key_value_rows) const {
  return {MatMul(key_value_rows, wk_), MatMul(key_value_rows, wv_)};
}

Var MultiHeadAttention::Attend(const Var& query_rows, const ProjectedKeys& kv,
                               std::vector<Matrix>* weights) const {
  const int head_dim = dim_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Var q = MatMul(query_rows, wq_);
  std::vector<Var> outputs;
  outputs.reserve(heads_);
  if (weights) weights->clear();
  for (int h = 0; h < heads_; ++h) {
    Var qh = SliceCols(q, h * head_dim, head_dim);
    Var kh = heads_ == 1 ? kv.keys : SliceCols(kv.keys, h * head_dim, head_dim);
    Var vh =
        heads_ == 1 ? kv.values : SliceCols(kv.values, h * head_dim, head_dim);
    Var attn = SoftmaxRows(Scale(MatMul(qh, Transpose(kh)), scale));
    if (weights) weights->push_back(attn.value());
    outputs.push_back(MatMul(attn, vh));
  }
  return heads_ == 1 ? outputs[0] : ConcatCols(outputs);
}

AdamW::AdamW(const ParamStore& store, Options options) : options_(options) {
  for (const auto& [name, v] : store.params()) {
    params_.push_back(v);
    m_.push_back(Matrix::Zero(v.rows(), v.cols()));
    v_.push_back(Matrix::Zero(v.rows(), v.cols()));
  }
}

void AdamW::Step(double lr) {
  ++step_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(step_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Var& p = params_[i];
    if (p.node()->grad.size() == 0) continue;
    const Matrix& g = p.node()->grad;
    m_[i] = options_.beta1 * m_[i] + (1.0 - options_.beta1) * g;
    v_[i] = options_.beta2 * v_[i] +
            (1.0 - options_.beta2) * g.cwiseProduct(g);
    Matrix& w = p.mutable_value();
    if (w.rows() > 1 && options_.weight_decay > 0.0) {
      w *= (1.0 - lr * options_.weight_decay);
    }
    w.array() -= lr * (m_[i].array() / bc1) /
                 ((v_[i].array() / bc2).sqrt() + options_.eps);
  }
}

}  // namespace nn
}  // namespace spanground
