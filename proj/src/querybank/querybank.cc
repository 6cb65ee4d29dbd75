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

#include "querybank/querybank.h"

#include <cctype>
#include <fstream>
#include <sstream>

#include "core/error.h"

namespace spanground {

namespace {

struct DefaultQuery {
  EntityType type;
  QueryStrategy strategy;
  const char* text;
  bool reconstructed;
};

// The PER, LOC and ORG annotations are the reference texts. The OTHER
// annotation and three of the Wikipedia definitions were written for this
// project and are shipped as editable defaults.
constexpr DefaultQuery kDefaults[] = {
    {EntityType::kPer, QueryStrategy::kKeyword, "Person", false},
    {EntityType::kLoc, QueryStrategy::kKeyword, "Location", false},
    {EntityType::kOrg, QueryStrategy::kKeyword, "Organization", false},
    {EntityType::kOther, QueryStrategy::kKeyword, "Others", false},
    {EntityType::kPer, QueryStrategy::kTemplate, "Please find Person", false},
    {EntityType::kLoc, QueryStrategy::kTemplate, "Please find Location", false},
    {EntityType::kOrg, QueryStrategy::kTemplate, "Please find Organization",
     false},
    {EntityType::kOther, QueryStrategy::kTemplate, "Please find Others", false},
    {EntityType::kPer, QueryStrategy::kWikipedia,
     "A person is a being that has certain capacities or attributes such as "
     "reason, morality, consciousness or self-consciousness.",
     true},
    {EntityType::kLoc, QueryStrategy::kWikipedia,
     "In geography, location or place are used to denote a region on Earth's "
     "surface.",
     true},
    {EntityType::kOrg, QueryStrategy::kWikipedia,
     "An organization is an entity, such as an institution or an association, "
     "that has a collective goal and is linked to an external environment.",
     false},
    {EntityType::kOther, QueryStrategy::kWikipedia,
     "A named entity is a real-world object, such as an event, a product or a "
     "work of art, that can be denoted with a proper name.",
     true},
    {EntityType::kPer, QueryStrategy::kKeywordAnnotation,
     "Person: People's name and fictional character.", false},
    {EntityType::kLoc, QueryStrategy::kKeywordAnnotation,
     "Location: Country, city, town continent by geographical location.",
     false},
    {EntityType::kOrg, QueryStrategy::kKeywordAnnotation,
     "Organization: Include club, company, government party, school "
     "government, and news organization.",
     false},
    {EntityType::kOther, QueryStrategy::kKeywordAnnotation,
     "Others: Other named entities such as event, product, work of art and "
     "nationality.",
     true},
};

std::string Trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::string_view QueryStrategyName(QueryStrategy strategy) {
  switch (strategy) {
    case QueryStrategy::kKeyword:
      return "keyword";
    case QueryStrategy::kTemplate:
      return "template";
    case QueryStrategy::kWikipedia:
      return "wikipedia";
    case QueryStrategy::kKeywordAnnotation:
      return "keyword_annotation";
  }
  return "?";
}

QueryStrategy ParseQueryStrategy(std::string_view name) {
  for (QueryStrategy s : kAllQueryStrategies) {
    if (QueryStrategyName(s) == name) return s;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown query strategy '" + std::string(name) +
                  "' (valid: keyword, template, wikipedia, "
                  "keyword_annotation)");
}

QueryBank::QueryBank() {
  for (const DefaultQuery& q : kDefaults) {
    table_[{q.type, q.strategy}] = {q.type, q.strategy, q.text,
                                    q.reconstructed};
  }
}

QuerySpec QueryBank::MakeQuery(EntityType type, QueryStrategy strategy) const {
  return table_.at({type, strategy});
}

void QueryBank::Override(EntityType type, QueryStrategy strategy,
                         std::string text) {
  if (Trim(text).empty()) {
    throw Error(ErrorCode::kInvalidArgument, "query text must be nonempty");
  }
  table_[{type, strategy}] = {type, strategy, std::move(text), false};
}

void QueryBank::LoadOverrides(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open query file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  ParseOverrides(ss.str(), path);
}

void QueryBank::ParseOverrides(std::string_view contents,
                               const std::string& origin) {
  std::istringstream in{std::string(contents)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    const size_t dot = t.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      throw Error(ErrorCode::kDataError,
                  origin + ":" + std::to_string(line_no) +
                      ": expected 'TYPE.strategy = text'");
    }
    EntityType type = ParseEntityType(Trim(t.substr(0, dot)));
    QueryStrategy strategy =
        ParseQueryStrategy(Trim(t.substr(dot + 1, eq - dot - 1)));
    Override(type, strategy, Trim(t.substr(eq + 1)));
  }
}

std::vector<std::string> TokenizeText(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      flush();
      tokens.emplace_back(1, ch);
    } else {
      current.push_back(ch);
    }
  }
  flush();
  return tokens;
}

std::vector<QueryInstance> BuildInstances(const ExamplePair& example,
                                          const QueryBank& bank,
                                          QueryStrategy strategy,
                                          bool require_boxes) {
  std::vector<QueryInstance> out;
  out.reserve(kAllEntityTypes.size());
  for (EntityType type : kAllEntityTypes) {
    QueryInstance inst;
    inst.example_id = example.id;
    inst.type = type;
    inst.query_tokens = TokenizeText(bank.MakeQuery(type, strategy).text);
    for (const EntitySpan& s : example.gold_entities) {
      if (s.type == type) inst.gold_spans.push_back(s);
    }
    inst.exists = !inst.gold_spans.empty();
    auto box = example.gold_boxes.find(type);
    if (box != example.gold_boxes.end()) {
      inst.gold_box = box->second;
    } else if (require_boxes) {
      throw Error(ErrorCode::kDataError,
                  "example " + example.id + ": missing " +
                      std::string(EntityTypeName(type)) + " box annotation");
    } else {
      inst.gold_box = BBox::WholeImage();
    }
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace spanground
