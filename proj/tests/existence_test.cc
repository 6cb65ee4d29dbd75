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

#include <random>
#include <string>
#include <vector>

#include "dense_oracle.h"
#include "doctest.h"
#include "existence/existence.h"
#include "test_util.h"

namespace spanground {
namespace {

using nn::Matrix;
using nn::Var;
using testing::RandomMatrix;

ModelConfig SmallConfig(int d, int heads) {
  ModelConfig c;
  c.hidden = d;
  c.heads = heads;
  c.dropout = 0.0;
  return c;
}

TEST_CASE("equal label embeddings give a constant label context") {
  nn::ParamStore store;
  std::mt19937_64 rng(1);
  LabelAttention la(store, "la", 8, 2, rng);
  store.Get("la.attention.wv").mutable_value() = Matrix::Identity(8, 8);
  const Matrix u = RandomMatrix(1, 8, rng);
  store.Get("la.labels").mutable_value() = u.replicate(2, 1);
  const Matrix h_l = la.LabelContext(Var(RandomMatrix(5, 8, rng))).value();
  for (Eigen::Index r = 0; r < 5; ++r) {
    CHECK((h_l.row(r) - u.row(0)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("label attention shape at full model width") {
  nn::ParamStore store;
  std::mt19937_64 rng(2);
  LabelAttention la(store, "la", 512, 8, rng);
  nn::NoGradGuard no_grad;
  const Var out = la.Forward(Var(RandomMatrix(33, 512, rng)));
  CHECK(out.rows() == 33);
  CHECK(out.cols() == 512);
}

TEST_CASE("label attention matches a dense multi-head oracle") {
  nn::ParamStore store;
  std::mt19937_64 rng(3);
  LabelAttention la(store, "la", 4, 2, rng);
  const Matrix rows = RandomMatrix(3, 4, rng);
  const Matrix out = la.Forward(Var(rows)).value();
  auto P = [&](const std::string& n) { return store.Get(n).value(); };
  const Matrix h_l =
      oracle::Attention(rows, P("la.labels"), P("la.attention.wq"),
                        P("la.attention.wk"), P("la.attention.wv"), 2);
  const Matrix expected = oracle::HConcat(h_l, rows) * P("la.output");
  CHECK((out - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("multi-head label attention equals concatenated single heads") {
  nn::ParamStore store;
  std::mt19937_64 rng(4);
  LabelAttention la(store, "la", 8, 2, rng);
  const Matrix rows = RandomMatrix(4, 8, rng);
  const Matrix h_l = la.LabelContext(Var(rows)).value();
  auto P = [&](const std::string& n) { return store.Get(n).value(); };
  for (int h = 0; h < 2; ++h) {
    // One head alone, fed the head's column slices of the projections.
    const Matrix expected = oracle::Attention(
        rows, P("la.labels"), P("la.attention.wq").middleCols(4 * h, 4),
        P("la.attention.wk").middleCols(4 * h, 4),
        P("la.attention.wv").middleCols(4 * h, 4), 1);
    CHECK((h_l.middleCols(4 * h, 4) - expected).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("existence-aware attention over a single row has unit weights") {
  nn::ParamStore store;
  std::mt19937_64 rng(5);
  ResidualAttention ra(store, "ra", 8, 2, rng);
  std::vector<Matrix> weights;
  const Matrix h_x = RandomMatrix(4, 8, rng);
  const Matrix g = RandomMatrix(1, 8, rng);
  const Matrix out = ra.Forward(Var(h_x), Var(g), &weights).value();
  for (const Matrix& w : weights) {
    CHECK(w.cols() == 1);
    for (Eigen::Index r = 0; r < w.rows(); ++r) CHECK(w(r, 0) == 1.0);
  }
  for (Eigen::Index r = 0; r < 4; ++r) {
    const double mean = out.row(r).mean();
    const double var = (out.row(r).array() - mean).square().mean();
    CHECK(std::abs(mean) < 1e-5);
    CHECK(std::abs(var - 1.0) < 1e-5);
  }
  const Matrix z = g * ra.attention().wv().value();
  const Matrix expected = oracle::LayerNorm(
      h_x + z.replicate(4, 1), Matrix::Ones(1, 8), Matrix::Zero(1, 8));
  CHECK((out - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("existence update over identical rows") {
  nn::ParamStore store;
  std::mt19937_64 rng(6);
  ModelConfig cfg = SmallConfig(4, 2);
  ExistenceInteraction ei(store, cfg, rng);
  const Matrix v = RandomMatrix(1, 4, rng);
  const Matrix g = RandomMatrix(1, 4, rng);
  const Matrix hs = v.replicate(2, 1);
  const Matrix out =
      ei.UpdateExistence(Var(g), Var(hs), Var(hs), Var(hs)).value();
  const Matrix expected =
      oracle::LayerNorm(g + v * ei.exist_update().attention().wv().value(),
                        Matrix::Ones(1, 4), Matrix::Zero(1, 4));
  CHECK(out.rows() == 1);
  CHECK((out - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("existence update matches a dense oracle over the stacked rows") {
  nn::ParamStore store;
  std::mt19937_64 rng(7);
  ModelConfig cfg = SmallConfig(4, 2);
  ExistenceInteraction ei(store, cfg, rng);
  const Matrix g = RandomMatrix(1, 4, rng);
  const Matrix hs = RandomMatrix(2, 4, rng);
  const Matrix he = RandomMatrix(2, 4, rng);
  const Matrix out = ei.UpdateExistence(Var(g), Var(hs), Var(he), Var(hs))
                         .value();
  const auto& att = ei.exist_update().attention();
  const Matrix z =
      oracle::Attention(g, oracle::VConcat(hs, he), att.wq().value(),
                        att.wk().value(), att.wv().value(), 2);
  const Matrix expected =
      oracle::LayerNorm(g + z, Matrix::Ones(1, 4), Matrix::Zero(1, 4));
  CHECK((out - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("existence context options change what the update attends over") {
  std::mt19937_64 data_rng(8);
  const Matrix g = RandomMatrix(1, 4, data_rng);
  const Matrix hs = RandomMatrix(3, 4, data_rng);
  const Matrix he = RandomMatrix(3, 4, data_rng);
  const Matrix hu = RandomMatrix(3, 4, data_rng);
  std::vector<Matrix> outs;
  for (ExistenceContext ctx :
       {ExistenceContext::kStartAndEnd, ExistenceContext::kFused,
        ExistenceContext::kStartOnly}) {
    nn::ParamStore store;
    std::mt19937_64 rng(9);
    ModelConfig cfg = SmallConfig(4, 2);
    cfg.existence_context = ctx;
    ExistenceInteraction ei(store, cfg, rng);
    outs.push_back(
        ei.UpdateExistence(Var(g), Var(hs), Var(he), Var(hu)).value());
  }
  CHECK((outs[0] - outs[1]).cwiseAbs().maxCoeff() > 1e-9);
  CHECK((outs[0] - outs[2]).cwiseAbs().maxCoeff() > 1e-9);
}

TEST_CASE("interaction outputs are layer normalized with the right shapes") {
  nn::ParamStore store;
  std::mt19937_64 rng(10);
  ExistenceInteraction ei(store, SmallConfig(8, 2), rng);
  const InteractionState s =
      ei.Forward(Var(RandomMatrix(5, 8, rng)), Var(RandomMatrix(1, 8, rng)));
  CHECK(s.h_tilde_s.rows() == 5);
  CHECK(s.h_tilde_e.rows() == 5);
  CHECK(s.h_tilde_g.rows() == 1);
  for (const Var* v : {&s.h_tilde_s, &s.h_tilde_e, &s.h_tilde_g}) {
    for (Eigen::Index r = 0; r < v->rows(); ++r) {
      CHECK(std::abs(v->value().row(r).mean()) < 1e-9);
    }
  }
}

TEST_CASE("existence module gradients match finite differences") {
  nn::ParamStore store;
  std::mt19937_64 rng(11);
  ExistenceInteraction ei(store, SmallConfig(8, 2), rng);
  const Matrix hu = RandomMatrix(6, 8, rng);
  const Matrix hg = RandomMatrix(1, 8, rng);
  auto loss = [&](const Var& u, const Var& g) {
    const InteractionState s = ei.Forward(u, g);
    std::vector<Var> parts = {testing::Project(s.h_tilde_s, 1),
                              testing::Project(s.h_tilde_e, 2),
                              testing::Project(s.h_tilde_g, 3)};
    return nn::Sum(nn::ConcatCols(parts));
  };
  CHECK(testing::GradCheck(
            [&](const std::vector<Var>& v) { return loss(v[0], v[1]); },
            {hu, hg}) < 1e-6);
  std::vector<std::string> names;
  for (const auto& [name, v] : store.params()) names.push_back(name);
  CHECK(testing::ParamGradCheck(store, names,
                                [&] { return loss(Var(hu), Var(hg)); }) < 1e-6);
}

}  // namespace
}  // namespace spanground
