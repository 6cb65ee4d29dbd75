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

#ifndef SPANGROUND_CORE_TYPES_H_
#define SPANGROUND_CORE_TYPES_H_

#include <array>
#include <compare>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace spanground {

enum class EntityType { kPer = 0, kLoc = 1, kOrg = 2, kOther = 3 };

inline constexpr std::array<EntityType, 4> kAllEntityTypes = {
    EntityType::kPer, EntityType::kLoc, EntityType::kOrg, EntityType::kOther};

std::string_view EntityTypeName(EntityType type);
// Accepts PER/LOC/ORG/OTHER (and MISC as an alias of OTHER).
EntityType ParseEntityType(std::string_view name);

// Token span over sentence tokens, both ends inclusive.
struct EntitySpan {
  int start = 0;
  int end = 0;
  EntityType type = EntityType::kPer;

  auto operator<=>(const EntitySpan&) const = default;
};

// Side length of the square frame all boxes and images live in.
inline constexpr double kFrameSize = 256.0;

// Corner-form box in the resized kFrameSize x kFrameSize frame.
struct BBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = kFrameSize;
  double y2 = kFrameSize;

  static BBox WholeImage() { return {0.0, 0.0, kFrameSize, kFrameSize}; }
  // Scales a box given in original pixels into the frame and clips it.
  static BBox FromOriginal(double x1, double y1, double x2, double y2,
                           double original_width, double original_height);

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool valid() const {
    return 0.0 <= x1 && x1 < x2 && x2 <= kFrameSize && 0.0 <= y1 && y1 < y2 &&
           y2 <= kFrameSize;
  }
  bool operator==(const BBox&) const = default;
};

// Intersection over union; 0 for disjoint boxes.
double Iou(const BBox& a, const BBox& b);

enum class Split { kTrain, kDev, kTest };
std::string_view SplitName(Split split);
Split ParseSplit(std::string_view name);

struct ExamplePair {
  std::string id;
  std::vector<std::string> tokens;
  std::string image_ref;
  std::vector<EntitySpan> gold_entities;
  std::map<EntityType, BBox> gold_boxes;
  Split split = Split::kTrain;

  // Throws Error(kDataError) naming the example when an invariant fails.
  void Validate() const;
  bool operator==(const ExamplePair&) const = default;
};

struct QueryInstance {
  std::string example_id;
  EntityType type = EntityType::kPer;
  std::vector<std::string> query_tokens;
  std::vector<EntitySpan> gold_spans;
  bool exists = false;
  BBox gold_box;
};

}  // namespace spanground

#endif  // SPANGROUND_CORE_TYPES_H_
