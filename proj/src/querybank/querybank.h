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

#ifndef SPANGROUND_QUERYBANK_QUERYBANK_H_
#define SPANGROUND_QUERYBANK_QUERYBANK_H_

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "core/types.h"

namespace spanground {

enum class QueryStrategy { kKeyword, kTemplate, kWikipedia, kKeywordAnnotation };

inline constexpr std::array<QueryStrategy, 4> kAllQueryStrategies = {
    QueryStrategy::kKeyword, QueryStrategy::kTemplate,
    QueryStrategy::kWikipedia, QueryStrategy::kKeywordAnnotation};

std::string_view QueryStrategyName(QueryStrategy strategy);
// Throws Error(kInvalidArgument) listing the valid names.
QueryStrategy ParseQueryStrategy(std::string_view name);

struct QuerySpec {
  EntityType type = EntityType::kPer;
  QueryStrategy strategy = QueryStrategy::kKeywordAnnotation;
  std::string text;
  // True when the shipped default was written for this project rather than
  // taken verbatim from the reference query set.
  bool reconstructed = false;
};

// Maps entity types to natural-language queries. The default table can be
// overridden entry by entry.
class QueryBank {
 public:
  QueryBank();

  QuerySpec MakeQuery(EntityType type, QueryStrategy strategy) const;
  void Override(EntityType type, QueryStrategy strategy, std::string text);

  // Reads "TYPE.strategy = query text" lines; '#' starts a comment line.
  void LoadOverrides(const std::string& path);
  void ParseOverrides(std::string_view contents, const std::string& origin);

 private:
  std::map<std::pair<EntityType, QueryStrategy>, QuerySpec> table_;
};

// Splits text into word tokens; punctuation characters become their own
// tokens ("Person: People's" -> Person, :, People, ', s).
std::vector<std::string> TokenizeText(std::string_view text);

// One instance per entity type, in kAllEntityTypes order. When
// `require_boxes` is set every type must have a box annotation; otherwise
// missing boxes become the whole image.
std::vector<QueryInstance> BuildInstances(const ExamplePair& example,
                                          const QueryBank& bank,
                                          QueryStrategy strategy,
                                          bool require_boxes);

}  // namespace spanground

#endif  // SPANGROUND_QUERYBANK_QUERYBANK_H_
