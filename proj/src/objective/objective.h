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

#ifndef SPANGROUND_OBJECTIVE_OBJECTIVE_H_
#define SPANGROUND_OBJECTIVE_OBJECTIVE_H_

#include <optional>

#include "nn/tensor.h"

namespace spanground {

// floor(log10(x)) for x > 0, with values within a relative 1e-12 below an
// exact decade snapped up to that decade.
int FloorLog10(double x);

// 10^-|floor(log10 a) - floor(log10 b)|. Requires a > 0 and b > 0.
double BalanceFactor(double a, double b);

// Keeps the last valid balance factor so a non-positive loss value mid
// training falls back instead of failing.
class BalanceTracker {
 public:
  double Update(double a, double b);
  double current() const { return current_; }
  long fallbacks() const { return fallbacks_; }
  void set_override(std::optional<double> value) { override_ = value; }
  // Reinstates a saved factor, e.g. when resuming from a checkpoint.
  void Restore(double current, long fallbacks) {
    current_ = current;
    fallbacks_ = fallbacks;
  }

 private:
  double current_ = 1.0;
  long fallbacks_ = 0;
  std::optional<double> override_;
};

struct LossWeights {
  double lambda1 = 1.0;
  double lambda2 = 2.0;
};

struct LossBundle {
  double qg = 0.0;
  double ed = 0.0;
  double esp = 0.0;
  double omega = 1.0;
  double lambda1 = 1.0;
  double lambda2 = 2.0;
};

// omega * L_QG + lambda1 * L_ED + lambda2 * L_ESP. Throws Error(kNumerical)
// naming the first non-finite or negative component.
double TotalLoss(const LossBundle& bundle);

// Differentiable form; omega is a constant.
nn::Var TotalLoss(const nn::Var& qg, const nn::Var& ed, const nn::Var& esp,
                  double omega, const LossWeights& weights);

}  // namespace spanground

#endif  // SPANGROUND_OBJECTIVE_OBJECTIVE_H_
