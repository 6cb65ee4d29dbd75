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

#include "nn/ops.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace spanground {
namespace nn {

namespace {

Var Record(Matrix value, std::initializer_list<Var> inputs,
           std::function<void(Node&)> backward) {
  Var out(std::move(value), false);
  if (!GradEnabled()) return out;
  bool any = false;
  for (const Var& v : inputs) any = any || v.requires_grad();
  if (!any) return out;
  Node& n = *out.node();
  n.requires_grad = true;
  for (const Var& v : inputs) n.parents.push_back(v.node());
  n.backward = std::move(backward);
  return out;
}

Var RecordMany(Matrix value, std::span<const Var> inputs,
               std::function<void(Node&)> backward) {
  Var out(std::move(value), false);
  if (!GradEnabled()) return out;
  bool any = false;
  for (const Var& v : inputs) any = any || v.requires_grad();
  if (!any) return out;
  Node& n = *out.node();
  n.requires_grad = true;
  for (const Var& v : inputs) n.parents.push_back(v.node());
  n.backward = std::move(backward);
  return out;
}

void CheckShape(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (ok) return;
  throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                              std::to_string(a.rows()) + "x" +
                              std::to_string(a.cols()) + " vs " +
                              std::to_string(b.rows()) + "x" +
                              std::to_string(b.cols()) + ")");
}

}  // namespace

Var Constant(Matrix value) { return Var(std::move(value), false); }

Var MatMul(const Var& a, const Var& b) {
  CheckShape(a.cols() == b.rows(), "MatMul", a.value(), b.value());
  Matrix out = a.value() * b.value();
  return Record(std::move(out), {a, b}, [](Node& n) {
    Node& pa = *n.parents[0];
    Node& pb = *n.parents[1];
    if (pa.requires_grad) pa.AccumulateGrad(n.grad * pb.value.transpose());
    if (pb.requires_grad) pb.AccumulateGrad(pa.value.transpose() * n.grad);
  });
}

Var Add(const Var& a, const Var& b) {
  CheckShape(a.rows() == b.rows() && a.cols() == b.cols(), "Add", a.value(),
             b.value());
  return Record(a.value() + b.value(), {a, b}, [](Node& n) {
    n.parents[0]->AccumulateGrad(n.grad);
    n.parents[1]->AccumulateGrad(n.grad);
  });
}

Var AddRow(const Var& a, const Var& row) {
  CheckShape(row.rows() == 1 && row.cols() == a.cols(), "AddRow", a.value(),
             row.value());
  Matrix out = a.value().rowwise() + row.value().row(0);
  return Record(std::move(out), {a, row}, [](Node& n) {
    n.parents[0]->AccumulateGrad(n.grad);
    if (n.parents[1]->requires_grad) {
      n.parents[1]->AccumulateGrad(n.grad.colwise().sum());
    }
  });
}

Var BroadcastRows(const Var& row, Eigen::Index r) {
  if (row.rows() != 1) throw std::invalid_argument("BroadcastRows: not a row");
  Matrix out = row.value().replicate(r, 1);
  return Record(std::move(out), {row}, [](Node& n) {
    n.parents[0]->AccumulateGrad(n.grad.colwise().sum());
  });
}

Var Scale(const Var& a, double s) {
  return Record(a.value() * s, {a},
                [s](Node& n) { n.parents[0]->AccumulateGrad(n.grad * s); });
}

Var Transpose(const Var& a) {
  return Record(a.value().transpose(), {a}, [](Node& n) {
    n.parents[0]->AccumulateGrad(n.grad.transpose());
  });
}

Var Sum(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return Record(std::move(out), {a}, [](Node& n) {
    const Matrix& v = n.parents[0]->value;
    n.parents[0]->AccumulateGrad(Matrix::Constant(v.rows(), v.cols(),
                                                  n.grad(0, 0)));
  });
}

Var Mean(std::span<const Var> inputs) {
  if (inputs.empty()) throw std::invalid_argument("Mean: no inputs");
  Matrix out = inputs[0].value();
  for (size_t i = 1; i < inputs.size(); ++i) {
    CheckShape(inputs[i].rows() == out.rows() && inputs[i].cols() == out.cols(),
               "Mean", out, inputs[i].value());
    out += inputs[i].value();
  }
  const double inv = 1.0 / static_cast<double>(inputs.size());
  out *= inv;
  return RecordMany(std::move(out), inputs, [inv](Node& n) {
    Matrix g = n.grad * inv;
    for (auto& p : n.parents) p->AccumulateGrad(g);
  });
}

Var Relu(const Var& a) {
  Matrix out = a.value().cwiseMax(0.0);
  return Record(std::move(out), {a}, [](Node& n) {
    const Matrix& x = n.parents[0]->value;
    n.parents[0]->AccumulateGrad(
        (x.array() > 0.0).select(n.grad, Matrix::Zero(x.rows(), x.cols())));
  });
}

Var Tanh(const Var& a) {
  Matrix out = a.value().array().tanh().matrix();
  return Record(std::move(out), {a}, [](Node& n) {
    n.parents[0]->AccumulateGrad(
        (n.grad.array() * (1.0 - n.value.array().square())).matrix());
  });
}

Var Sigmoid(const Var& a) {
  Matrix out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return Record(std::move(out), {a}, [](Node& n) {
    n.parents[0]->AccumulateGrad(
        (n.grad.array() * n.value.array() * (1.0 - n.value.array())).matrix());
  });
}

Var SoftmaxRows(const Var& a) {
  Matrix out = a.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double mx = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - mx).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return Record(std::move(out), {a}, [](Node& n) {
    const Matrix& y = n.value;
    Eigen::VectorXd dots = (n.grad.array() * y.array()).rowwise().sum();
    Matrix g = y.array() * (n.grad.colwise() - dots).array();
    n.parents[0]->AccumulateGrad(g);
  });
}

Var ConcatCols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("ConcatCols: no inputs");
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    CheckShape(p.rows() == rows, "ConcatCols", parts[0].value(), p.value());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<Eigen::Index> offsets;
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    offsets.push_back(at);
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return RecordMany(std::move(out), parts, [offsets](Node& n) {
    for (size_t i = 0; i < n.parents.size(); ++i) {
      Node& p = *n.parents[i];
      if (p.requires_grad) {
        p.AccumulateGrad(n.grad.middleCols(offsets[i], p.value.cols()));
      }
    }
  });
}

Var ConcatRows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("ConcatRows: no inputs");
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    CheckShape(p.cols() == cols, "ConcatRows", parts[0].value(), p.value());
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<Eigen::Index> offsets;
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    offsets.push_back(at);
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return RecordMany(std::move(out), parts, [offsets](Node& n) {
    for (size_t i = 0; i < n.parents.size(); ++i) {
      Node& p = *n.parents[i];
      if (p.requires_grad) {
        p.AccumulateGrad(n.grad.middleRows(offsets[i], p.value.rows()));
      }
    }
  });
}

Var SliceRows(const Var& a, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > a.rows()) {
    throw std::out_of_range("SliceRows: range outside input");
  }
  Matrix out = a.value().middleRows(begin, count);
  return Record(std::move(out), {a}, [begin](Node& n) {
    Node& p = *n.parents[0];
    Matrix g = Matrix::Zero(p.value.rows(), p.value.cols());
    g.middleRows(begin, n.grad.rows()) = n.grad;
    p.AccumulateGrad(g);
  });
}

Var SliceCols(const Var& a, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > a.cols()) {
    throw std::out_of_range("SliceCols: range outside input");
  }
  Matrix out = a.value().middleCols(begin, count);
  return Record(std::move(out), {a}, [begin](Node& n) {
    Node& p = *n.parents[0];
    Matrix g = Matrix::Zero(p.value.rows(), p.value.cols());
    g.middleCols(begin, n.grad.cols()) = n.grad;
    p.AccumulateGrad(g);
  });
}

Var GatherRows(const Var& table, std::span<const int> ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) {
      throw std::out_of_range("GatherRows: id " + std::to_string(ids[i]));
    }
    out.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return Record(std::move(out), {table}, [idx](Node& n) {
    Node& p = *n.parents[0];
    Matrix g = Matrix::Zero(p.value.rows(), p.value.cols());
    for (size_t i = 0; i < idx.size(); ++i) {
      g.row(idx[i]) += n.grad.row(static_cast<Eigen::Index>(i));
    }
    p.AccumulateGrad(g);
  });
}

Var LayerNormRows(const Var& a, const Var& gamma, const Var& beta,
                  double eps) {
  const Matrix& x = a.value();
  const Eigen::Index d = x.cols();
  Eigen::VectorXd mean = x.rowwise().mean();
  Matrix centered = x.colwise() - mean;
  Eigen::VectorXd inv_std =
      ((centered.array().square().rowwise().sum() / static_cast<double>(d)) +
       eps)
          .rsqrt();
  Matrix xhat = centered.array().colwise() * inv_std.array();
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array())
                   .rowwise() +
               beta.value().row(0).array();
  return Record(std::move(out), {a, gamma, beta},
                [xhat, inv_std, d](Node& n) {
                  Node& px = *n.parents[0];
                  Node& pg = *n.parents[1];
                  Node& pb = *n.parents[2];
                  if (pg.requires_grad) {
                    pg.AccumulateGrad(
                        (n.grad.array() * xhat.array()).colwise().sum());
                  }
                  if (pb.requires_grad) pb.AccumulateGrad(n.grad.colwise().sum());
                  if (px.requires_grad) {
                    Matrix dxhat =
                        n.grad.array().rowwise() * pg.value.row(0).array();
                    Eigen::VectorXd m1 = dxhat.rowwise().mean();
                    Eigen::VectorXd m2 =
                        (dxhat.array() * xhat.array()).rowwise().sum() /
                        static_cast<double>(d);
                    Matrix dx = (dxhat.colwise() - m1) -
                                Matrix(xhat.array().colwise() * m2.array());
                    dx = dx.array().colwise() * inv_std.array();
                    px.AccumulateGrad(dx);
                  }
                });
}

Var BatchNormCols(const Var& a, const Var& gamma, const Var& beta,
                  BatchNormStats& stats, bool training, double momentum,
                  double eps) {
  const Matrix& x = a.value();
  const Eigen::Index rows = x.rows();
  if (!training || rows < 2) {
    Eigen::RowVectorXd inv_std =
        (stats.running_var.row(0).array() + eps).rsqrt();
    Eigen::RowVectorXd scale = inv_std.array() * gamma.value().row(0).array();
    Matrix xhat = (x.rowwise() - stats.running_mean.row(0)).array().rowwise() *
                  inv_std.array();
    Matrix out = (x.rowwise() - stats.running_mean.row(0)).array().rowwise() *
                     scale.array();
    out = out.rowwise() + beta.value().row(0);
    return Record(std::move(out), {a, gamma, beta}, [xhat, scale](Node& n) {
      Node& px = *n.parents[0];
      Node& pg = *n.parents[1];
      Node& pb = *n.parents[2];
      if (px.requires_grad) {
        px.AccumulateGrad(n.grad.array().rowwise() * scale.array());
      }
      if (pg.requires_grad) {
        pg.AccumulateGrad((n.grad.array() * xhat.array()).colwise().sum());
      }
      if (pb.requires_grad) pb.AccumulateGrad(n.grad.colwise().sum());
    });
  }

  Eigen::RowVectorXd mean = x.colwise().mean();
  Matrix centered = x.rowwise() - mean;
  Eigen::RowVectorXd var =
      centered.array().square().colwise().sum() / static_cast<double>(rows);
  Eigen::RowVectorXd inv_std = (var.array() + eps).rsqrt();
  Matrix xhat = centered.array().rowwise() * inv_std.array();
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array())
                   .rowwise() +
               beta.value().row(0).array();

  const double unbias = static_cast<double>(rows) / (rows - 1);
  stats.running_mean = (1.0 - momentum) * stats.running_mean + momentum * mean;
  stats.running_var =
      (1.0 - momentum) * stats.running_var + momentum * unbias * var;

  return Record(std::move(out), {a, gamma, beta},
                [xhat, inv_std, rows](Node& n) {
                  Node& px = *n.parents[0];
                  Node& pg = *n.parents[1];
                  Node& pb = *n.parents[2];
                  if (pg.requires_grad) {
                    pg.AccumulateGrad(
                        (n.grad.array() * xhat.array()).colwise().sum());
                  }
                  if (pb.requires_grad) pb.AccumulateGrad(n.grad.colwise().sum());
                  if (px.requires_grad) {
                    Matrix dxhat =
                        n.grad.array().rowwise() * pg.value.row(0).array();
                    Eigen::RowVectorXd m1 = dxhat.colwise().mean();
                    Eigen::RowVectorXd m2 =
                        (dxhat.array() * xhat.array()).colwise().sum() /
                        static_cast<double>(rows);
                    Matrix dx = (dxhat.rowwise() - m1) -
                                Matrix(xhat.array().rowwise() * m2.array());
                    dx = dx.array().rowwise() * inv_std.array();
                    px.AccumulateGrad(dx);
                  }
                });
}

Var Dropout(const Var& a, double rate, bool training, std::mt19937_64& rng) {
  if (!training || rate <= 0.0) return a;
  if (rate >= 1.0) throw std::invalid_argument("Dropout: rate must be < 1");
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  Matrix mask(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = keep(rng) ? scale : 0.0;
  }
  Matrix out = a.value().cwiseProduct(mask);
  return Record(std::move(out), {a}, [mask](Node& n) {
    n.parents[0]->AccumulateGrad(n.grad.cwiseProduct(mask));
  });
}

Var Im2Col(const Var& a, int height, int width, int kernel, int stride,
           int pad) {
  if (a.rows() != static_cast<Eigen::Index>(height) * width) {
    throw std::invalid_argument("Im2Col: rows != height*width");
  }
  const int channels = static_cast<int>(a.cols());
  const int out_h = (height + 2 * pad - kernel) / stride + 1;
  const int out_w = (width + 2 * pad - kernel) / stride + 1;
  const int patch = kernel * kernel * channels;
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(out_h) * out_w, patch);
  const Matrix& x = a.value();
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      const Eigen::Index row = static_cast<Eigen::Index>(oy) * out_w + ox;
      for (int ky = 0; ky < kernel; ++ky) {
        const int iy = oy * stride - pad + ky;
        if (iy < 0 || iy >= height) continue;
        for (int kx = 0; kx < kernel; ++kx) {
          const int ix = ox * stride - pad + kx;
          if (ix < 0 || ix >= width) continue;
          out.row(row).segment((ky * kernel + kx) * channels, channels) =
              x.row(static_cast<Eigen::Index>(iy) * width + ix);
        }
      }
    }
  }
  return Record(std::move(out), {a}, [=](Node& n) {
    Node& p = *n.parents[0];
    Matrix g = Matrix::Zero(p.value.rows(), p.value.cols());
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        const Eigen::Index row = static_cast<Eigen::Index>(oy) * out_w + ox;
        for (int ky = 0; ky < kernel; ++ky) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= height) continue;
          for (int kx = 0; kx < kernel; ++kx) {
            const int ix = ox * stride - pad + kx;
            if (ix < 0 || ix >= width) continue;
            g.row(static_cast<Eigen::Index>(iy) * width + ix) +=
                n.grad.row(row).segment((ky * kernel + kx) * channels,
                                        channels);
          }
        }
      }
    }
    p.AccumulateGrad(g);
  });
}

Var Upsample2x(const Var& a, int height, int width) {
  if (a.rows() != static_cast<Eigen::Index>(height) * width) {
    throw std::invalid_argument("Upsample2x: rows != height*width");
  }
  const int out_w = 2 * width;
  Matrix out(static_cast<Eigen::Index>(4) * height * width, a.cols());
  const Matrix& x = a.value();
  for (int y = 0; y < 2 * height; ++y) {
    for (int xx = 0; xx < out_w; ++xx) {
      out.row(static_cast<Eigen::Index>(y) * out_w + xx) =
          x.row(static_cast<Eigen::Index>(y / 2) * width + xx / 2);
    }
  }
  return Record(std::move(out), {a}, [=](Node& n) {
    Node& p = *n.parents[0];
    Matrix g = Matrix::Zero(p.value.rows(), p.value.cols());
    for (int y = 0; y < 2 * height; ++y) {
      for (int xx = 0; xx < out_w; ++xx) {
        g.row(static_cast<Eigen::Index>(y / 2) * width + xx / 2) +=
            n.grad.row(static_cast<Eigen::Index>(y) * out_w + xx);
      }
    }
    p.AccumulateGrad(g);
  });
}

Var CrossEntropyRows(const Var& logits, std::span<const int> labels,
                     std::span<const double> mask) {
  const Matrix& x = logits.value();
  if (static_cast<Eigen::Index>(labels.size()) != x.rows() ||
      mask.size() != labels.size()) {
    throw std::invalid_argument("CrossEntropyRows: label/mask size mismatch");
  }
  Matrix probs(x.rows(), x.cols());
  double loss = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mx = x.row(r).maxCoeff();
    const double lse = mx + std::log((x.row(r).array() - mx).exp().sum());
    probs.row(r) = (x.row(r).array() - lse).exp().matrix();
    if (mask[r] != 0.0) loss += mask[r] * (lse - x(r, labels[r]));
  }
  Matrix out(1, 1);
  out(0, 0) = loss;
  std::vector<int> lab(labels.begin(), labels.end());
  std::vector<double> msk(mask.begin(), mask.end());
  return Record(std::move(out), {logits}, [probs, lab, msk](Node& n) {
    Matrix g = probs;
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      g(r, lab[r]) -= 1.0;
      g.row(r) *= msk[r] * n.grad(0, 0);
    }
    n.parents[0]->AccumulateGrad(g);
  });
}

Var BceWithLogitsSum(const Var& logits, const Matrix& targets) {
  const Matrix& x = logits.value();
  CheckShape(x.rows() == targets.rows() && x.cols() == targets.cols(),
             "BceWithLogitsSum", x, targets);
  Matrix out(1, 1);
  out(0, 0) = (x.array().max(0.0) - x.array() * targets.array() +
               (-x.array().abs()).exp().log1p())
                  .sum();
  return Record(std::move(out), {logits}, [targets](Node& n) {
    const Matrix& x = n.parents[0]->value;
    Matrix sig = (1.0 / (1.0 + (-x.array()).exp())).matrix();
    n.parents[0]->AccumulateGrad((sig - targets) * n.grad(0, 0));
  });
}

Var MeanSquaredError(const Var& a, const Matrix& target) {
  CheckShape(a.rows() == target.rows() && a.cols() == target.cols(),
             "MeanSquaredError", a.value(), target);
  const double count = static_cast<double>(target.size());
  Matrix out(1, 1);
  out(0, 0) = (a.value() - target).squaredNorm() / count;
  return Record(std::move(out), {a}, [target, count](Node& n) {
    n.parents[0]->AccumulateGrad((n.parents[0]->value - target) *
                                 (2.0 * n.grad(0, 0) / count));
  });
}

}  // namespace nn
}  // namespace spanground
