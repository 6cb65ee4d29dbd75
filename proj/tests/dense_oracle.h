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

#ifndef SPANGROUND_TESTS_DENSE_ORACLE_H_
#define SPANGROUND_TESTS_DENSE_ORACLE_H_

// Plain Eigen re-implementations of the model's building blocks, written
// independently of the autodiff ops so tests can compare against them.

#include <cmath>

#include "nn/tensor.h"

namespace spanground::oracle {

using nn::Matrix;

inline Matrix RowSoftmax(Matrix m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    double mx = m(r, 0);
    for (Eigen::Index c = 1; c < m.cols(); ++c) mx = std::max(mx, m(r, c));
    double total = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = std::exp(m(r, c) - mx);
      total += m(r, c);
    }
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) /= total;
  }
  return m;
}

inline Matrix LayerNorm(const Matrix& x, const Matrix& g, const Matrix& b,
                        double eps = 1e-12) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    double var = 0.0;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      var += (x(r, c) - mean) * (x(r, c) - mean);
    }
    var /= static_cast<double>(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      out(r, c) = (x(r, c) - mean) / std::sqrt(var + eps) * g(0, c) + b(0, c);
    }
  }
  return out;
}

// One head at a time with explicit loops over keys.
inline Matrix Attention(const Matrix& queries, const Matrix& context,
                        const Matrix& wq, const Matrix& wk, const Matrix& wv,
                        int heads) {
  const Eigen::Index d = wq.cols();
  const Eigen::Index dh = d / heads;
  Matrix out(queries.rows(), d);
  for (int h = 0; h < heads; ++h) {
    const Matrix q = queries * wq.middleCols(h * dh, dh);
    const Matrix k = context * wk.middleCols(h * dh, dh);
    const Matrix v = context * wv.middleCols(h * dh, dh);
    Matrix scores(q.rows(), k.rows());
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      for (Eigen::Index j = 0; j < k.rows(); ++j) {
        scores(i, j) = q.row(i).dot(k.row(j)) / std::sqrt(double(dh));
      }
    }
    const Matrix a = RowSoftmax(scores);
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(dh);
      for (Eigen::Index j = 0; j < k.rows(); ++j) acc += a(i, j) * v.row(j);
      out.block(i, h * dh, 1, dh) = acc;
    }
  }
  return out;
}

inline Matrix Linear(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix y = x * w;
  if (b.size()) y.rowwise() += b.row(0);
  return y;
}

inline Matrix Relu(Matrix x) { return x.cwiseMax(0.0); }

inline Matrix HConcat(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

inline Matrix VConcat(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

}  // namespace spanground::oracle

#endif  // SPANGROUND_TESTS_DENSE_ORACLE_H_
