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

#include "core/types.h"

#include <algorithm>
#include <string>

#include "core/error.h"

namespace spanground {

std::string_view EntityTypeName(EntityType type) {
  switch (type) {
    case EntityType::kPer:
      return "PER";
    case EntityType::kLoc:
      return "LOC";
    case EntityType::kOrg:
      return "ORG";
    case EntityType::kOther:
      return "OTHER";
  }
  return "?";
}

EntityType ParseEntityType(std::string_view name) {
  if (name == "PER") return EntityType::kPer;
  if (name == "LOC") return EntityType::kLoc;
  if (name == "ORG") return EntityType::kOrg;
  if (name == "OTHER" || name == "MISC") return EntityType::kOther;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown entity type '" + std::string(name) +
                  "' (expected PER, LOC, ORG or OTHER)");
}

BBox BBox::FromOriginal(double x1, double y1, double x2, double y2,
                        double original_width, double original_height) {
  if (original_width <= 0 || original_height <= 0) {
    throw Error(ErrorCode::kDataError, "original image size must be positive");
  }
  const double sx = kFrameSize / original_width;
  const double sy = kFrameSize / original_height;
  auto clip = [](double v) { return std::clamp(v, 0.0, kFrameSize); };
  return {clip(x1 * sx), clip(y1 * sy), clip(x2 * sx), clip(y2 * sy)};
}

double Iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kDev:
      return "dev";
    case Split::kTest:
      return "test";
  }
  return "?";
}

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev" || name == "val" || name == "valid") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown split '" + std::string(name) +
                  "' (expected train, dev or test)");
}

void ExamplePair::Validate() const {
  const int n = static_cast<int>(tokens.size());
  if (n == 0) throw Error(ErrorCode::kDataError, id + ": empty sentence");
  for (const EntitySpan& s : gold_entities) {
    if (s.start < 0 || s.start > s.end || s.end >= n) {
      throw Error(ErrorCode::kDataError,
                  id + ": entity span [" + std::to_string(s.start) + "," +
                      std::to_string(s.end) + "] outside sentence of length " +
                      std::to_string(n));
    }
  }
  for (const auto& [type, box] : gold_boxes) {
    if (!box.valid()) {
      throw Error(ErrorCode::kDataError,
                  id + ": invalid " + std::string(EntityTypeName(type)) +
                      " box");
    }
  }
}

}  // namespace spanground
