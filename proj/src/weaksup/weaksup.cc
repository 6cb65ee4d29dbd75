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

#include "weaksup/weaksup.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "core/error.h"
#include "nn/ops.h"

namespace spanground {

namespace {

constexpr std::array<std::pair<SampleOrigin, std::string_view>, 3>
    kOriginNames = {{{SampleOrigin::kExternalUnmodified, "external_unmodified"},
                     {SampleOrigin::kExternalQueryReplaced,
                      "external_query_replaced"},
                     {SampleOrigin::kInDomain, "in_domain"}}};

const QuerySpec& QueryFor(std::span<const QuerySpec> queries, EntityType type) {
  for (const QuerySpec& q : queries) {
    if (q.type == type) return q;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "no query for type " + std::string(EntityTypeName(type)));
}

std::vector<std::string_view> SplitTabs(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t begin = 0;
  while (true) {
    const size_t tab = line.find('\t', begin);
    fields.push_back(line.substr(begin, tab - begin));
    if (tab == std::string_view::npos) break;
    begin = tab + 1;
  }
  return fields;
}

double ParseNumber(std::string_view field, const std::string& where) {
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() ||
      !std::isfinite(value)) {
    throw Error(ErrorCode::kDataError,
                where + ": malformed number '" + std::string(field) + "'");
  }
  return value;
}

void AppendNumber(std::string& out, double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  out.append(buffer, result.ptr);
}

}  // namespace

std::string_view SampleOriginName(SampleOrigin origin) {
  for (const auto& [o, name] : kOriginNames) {
    if (o == origin) return name;
  }
  return "unknown";
}

SampleOrigin ParseSampleOrigin(std::string_view name) {
  for (const auto& [o, n] : kOriginNames) {
    if (n == name) return o;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown sample origin '" + std::string(name) + "'");
}

Eigen::VectorXd BackboneEmbedder::Embed(const std::string& text) {
  TextLayout layout;
  layout.ids.push_back(backbone_.cls_id());
  for (const std::string& word : TokenizeText(text)) {
    for (int id : backbone_.Tokenize(word)) layout.ids.push_back(id);
  }
  const int pieces = layout.length() - 1;
  if (pieces == 0) return Eigen::VectorXd::Zero(backbone_.hidden_size());
  layout.ids.push_back(backbone_.sep_id());
  if (layout.length() > backbone_.max_length()) {
    throw Error(ErrorCode::kInvalidArgument,
                "phrase exceeds the backbone length limit: " + text);
  }
  layout.segments.assign(layout.ids.size(), 0);
  layout.query_length = pieces;
  nn::NoGradGuard no_grad;
  const nn::Matrix states = backbone_.Encode(layout, false).value();
  return states.middleRows(1, pieces).colwise().mean().transpose();
}

void TableEmbedder::Set(const std::string& text, Eigen::VectorXd vector) {
  table_[text] = std::move(vector);
}

Eigen::VectorXd TableEmbedder::Embed(const std::string& text) {
  auto it = table_.find(text);
  if (it == table_.end()) {
    throw Error(ErrorCode::kNotFound, "no embedding for '" + text + "'");
  }
  return it->second;
}

double CosineSimilarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kInvalidArgument, "embedding sizes differ");
  }
  return a.dot(b) / (a.norm() * b.norm());
}

FilterOutcome FilterBySimilarity(std::span<const PhraseSample> corpus,
                                 std::span<const QuerySpec> queries,
                                 PhraseEmbedder& embedder, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tau must lie in (0, 1)");
  }
  if (queries.size() != kAllEntityTypes.size()) {
    throw Error(ErrorCode::kInvalidArgument, "expected one query per type");
  }
  std::vector<Eigen::VectorXd> query_vectors;
  for (const QuerySpec& q : queries) {
    query_vectors.push_back(embedder.Embed(q.text));
    if (query_vectors.back().norm() == 0.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "zero embedding for the " +
                      std::string(EntityTypeName(q.type)) + " query");
    }
  }

  FilterOutcome out;
  for (const PhraseSample& sample : corpus) {
    const Eigen::VectorXd v = embedder.Embed(sample.phrase);
    if (v.norm() == 0.0) {
      ++out.zero_norm_skipped;
      continue;
    }
    size_t best = 0;
    double best_score = -2.0;
    for (size_t k = 0; k < queries.size(); ++k) {
      const double s = CosineSimilarity(v, query_vectors[k]);
      if (s > best_score) {
        best_score = s;
        best = k;
      }
    }
    if (best_score >= tau) {
      PhraseSample kept = sample;
      kept.type = queries[best].type;
      kept.score = best_score;
      out.kept.push_back(std::move(kept));
    } else {
      ++out.dropped;
    }
  }
  return out;
}

std::vector<PhraseSample> ReplaceQueries(std::span<const PhraseSample> samples,
                                         std::span<const QuerySpec> queries) {
  std::vector<PhraseSample> copies;
  copies.reserve(samples.size());
  for (const PhraseSample& s : samples) {
    if (!s.type) {
      throw Error(ErrorCode::kInvalidArgument,
                  "sample " + s.id + " has no matched type");
    }
    PhraseSample copy = s;
    copy.id = s.id + "/q";
    copy.phrase = QueryFor(queries, *s.type).text;
    copy.origin = SampleOrigin::kExternalQueryReplaced;
    copies.push_back(std::move(copy));
  }
  return copies;
}

std::array<size_t, 3> SplitSizes(size_t n, const SplitRatio& ratio) {
  if (!(ratio.train > 0 && ratio.val > 0 && ratio.test > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "split ratios must be positive");
  }
  const double total = ratio.train + ratio.val + ratio.test;
  const auto cut = [&](double fraction) {
    return static_cast<size_t>(std::llround(static_cast<double>(n) * fraction));
  };
  const size_t b1 = cut(ratio.train / total);
  const size_t b2 = std::max(b1, cut((ratio.train + ratio.val) / total));
  return {b1, b2 - b1, n - b2};
}

CorpusSplits MergeAndSplit(std::vector<PhraseSample> merged,
                           const SplitRatio& ratio, unsigned long long seed) {
  if (merged.empty()) {
    throw Error(ErrorCode::kDataError, "merged corpus is empty");
  }
  const std::array<size_t, 3> sizes = SplitSizes(merged.size(), ratio);
  std::stable_sort(merged.begin(), merged.end(),
                   [](const PhraseSample& a, const PhraseSample& b) {
                     return a.id < b.id;
                   });
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle.
  std::mt19937_64 rng(seed);
  for (size_t i = merged.size() - 1; i > 0; --i) {
    std::swap(merged[i], merged[rng() % (i + 1)]);
  }
  CorpusSplits out;
  auto begin = std::make_move_iterator(merged.begin());
  out.train.assign(begin, begin + sizes[0]);
  out.val.assign(begin + sizes[0], begin + sizes[0] + sizes[1]);
  out.test.assign(begin + sizes[0] + sizes[1],
                  std::make_move_iterator(merged.end()));
  return out;
}

std::vector<PhraseSample> ParsePhraseCorpus(std::string_view contents,
                                            const std::string& prefix,
                                            SampleOrigin default_origin) {
  std::vector<PhraseSample> samples;
  size_t line_no = 0;
  size_t begin = 0;
  while (begin < contents.size()) {
    size_t end = contents.find('\n', begin);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(begin, end - begin);
    begin = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    const std::string where = prefix + " line " + std::to_string(line_no);
    const std::vector<std::string_view> f = SplitTabs(line);
    if (f.size() < 8 || f.size() > 10) {
      throw Error(ErrorCode::kDataError,
                  where + ": expected 8 to 10 tab-separated fields, got " +
                      std::to_string(f.size()));
    }
    PhraseSample s;
    char id[32];
    std::snprintf(id, sizeof(id), "%08zu", line_no);
    s.id = prefix + ":" + id;
    s.image_ref = std::string(f[0]);
    s.phrase = std::string(f[1]);
    s.box = {ParseNumber(f[2], where), ParseNumber(f[3], where),
             ParseNumber(f[4], where), ParseNumber(f[5], where),
             ParseNumber(f[6], where), ParseNumber(f[7], where)};
    if (!s.box.valid()) {
      throw Error(ErrorCode::kDataError, where + ": malformed box");
    }
    s.origin = default_origin;
    try {
      if (f.size() == 9) {
        s.type = ParseEntityType(f[8]);
      } else if (f.size() == 10) {
        s.origin = ParseSampleOrigin(f[8]);
        if (f[9] != "-") s.type = ParseEntityType(f[9]);
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::kDataError, where + ": " + e.what());
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<PhraseSample> LoadPhraseCorpus(const std::string& path,
                                           SampleOrigin default_origin) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParsePhraseCorpus(buffer.str(), path, default_origin);
}

std::string FormatPhraseCorpus(std::span<const PhraseSample> samples) {
  std::string out;
  for (const PhraseSample& s : samples) {
    for (const std::string* field : {&s.image_ref, &s.phrase}) {
      if (field->find_first_of("\t\n") != std::string::npos) {
        throw Error(ErrorCode::kInvalidArgument,
                    "sample " + s.id + " has a tab or newline in a text field");
      }
    }
    out += s.image_ref;
    out += '\t';
    out += s.phrase;
    for (double v : {s.box.x1, s.box.y1, s.box.x2, s.box.y2,
                     s.box.image_width, s.box.image_height}) {
      out += '\t';
      AppendNumber(out, v);
    }
    out += '\t';
    out += SampleOriginName(s.origin);
    out += '\t';
    out += s.type ? EntityTypeName(*s.type) : std::string_view("-");
    out += '\n';
  }
  return out;
}

void SavePhraseCorpus(const std::string& path,
                      std::span<const PhraseSample> samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << FormatPhraseCorpus(samples);
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path);
}

WeakCorpus BuildWeakCorpus(std::span<const PhraseSample> external,
                           std::span<const PhraseSample> in_domain,
                           std::span<const QuerySpec> queries,
                           PhraseEmbedder& embedder, double tau,
                           const SplitRatio& ratio, unsigned long long seed) {
  FilterOutcome filtered = FilterBySimilarity(external, queries, embedder, tau);
  WeakCorpus out;
  out.kept = static_cast<int>(filtered.kept.size());
  out.dropped = filtered.dropped;
  out.zero_norm_skipped = filtered.zero_norm_skipped;
  out.in_domain = static_cast<int>(in_domain.size());
  std::vector<PhraseSample> merged = ReplaceQueries(filtered.kept, queries);
  merged.insert(merged.end(), std::make_move_iterator(filtered.kept.begin()),
                std::make_move_iterator(filtered.kept.end()));
  for (PhraseSample s : in_domain) {
    s.origin = SampleOrigin::kInDomain;
    merged.push_back(std::move(s));
  }
  out.splits = MergeAndSplit(std::move(merged), ratio, seed);
  return out;
}

}  // namespace spanground
