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

#include "objective/objective.h"

#include <cmath>
#include <cstdlib>
#include <string>

#include "core/error.h"
#include "nn/ops.h"

namespace spanground {

int FloorLog10(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw Error(ErrorCode::kInvalidArgument, "FloorLog10 needs a finite x > 0");
  }
  constexpr double kSnap = 1.0 - 1e-12;
  int k = static_cast<int>(std::floor(std::log10(x)));
  while (x < std::pow(10.0, k) * kSnap) --k;
  while (x >= std::pow(10.0, k + 1) * kSnap) ++k;
  return k;
}

double BalanceFactor(double a, double b) {
  const int gap = std::abs(FloorLog10(a) - FloorLog10(b));
  return std::pow(10.0, -gap);
}

double BalanceTracker::Update(double a, double b) {
  if (override_) {
    current_ = *override_;
    return current_;
  }
  if (a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b)) {
    current_ = BalanceFactor(a, b);
  } else {
    ++fallbacks_;
  }
  return current_;
}

double TotalLoss(const LossBundle& bundle) {
  auto check = [](double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::kNumerical,
                  std::string("loss component ") + name + " is " +
                      std::to_string(v));
    }
  };
  check(bundle.qg, "L_QG");
  check(bundle.ed, "L_ED");
  check(bundle.esp, "L_ESP");
  return bundle.omega * bundle.qg + bundle.lambda1 * bundle.ed +
         bundle.lambda2 * bundle.esp;
}

nn::Var TotalLoss(const nn::Var& qg, const nn::Var& ed, const nn::Var& esp,
                  double omega, const LossWeights& weights) {
  return nn::Add(nn::Add(nn::Scale(qg, omega), nn::Scale(ed, weights.lambda1)),
                 nn::Scale(esp, weights.lambda2));
}

}  // namespace spanground
