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

#ifndef SPANGROUND_WEAKSUP_WEAKSUP_H_
#define SPANGROUND_WEAKSUP_WEAKSUP_H_

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "core/types.h"
#include "encoders/text_encoder.h"
#include "querybank/querybank.h"

namespace spanground {

enum class SampleOrigin {
  kExternalUnmodified,
  kExternalQueryReplaced,
  kInDomain,
};

std::string_view SampleOriginName(SampleOrigin origin);
SampleOrigin ParseSampleOrigin(std::string_view name);

// A box in original image pixels together with the image size.
struct PixelBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;
  double image_width = 0.0;
  double image_height = 0.0;

  bool valid() const {
    return 0.0 <= x1 && x1 < x2 && x2 <= image_width && 0.0 <= y1 &&
           y1 < y2 && y2 <= image_height;
  }
  BBox ToFrame() const {
    return BBox::FromOriginal(x1, y1, x2, y2, image_width, image_height);
  }
  bool operator==(const PixelBox&) const = default;
};

struct PhraseSample {
  std::string id;
  std::string image_ref;
  std::string phrase;
  PixelBox box;
  SampleOrigin origin = SampleOrigin::kExternalUnmodified;
  // Set by the similarity filter or given by in-domain annotations.
  std::optional<EntityType> type;
  double score = 0.0;
};

class PhraseEmbedder {
 public:
  virtual ~PhraseEmbedder() = default;
  virtual Eigen::VectorXd Embed(const std::string& text) = 0;
};

// Mean of the backbone's contextual states over the text's word pieces.
class BackboneEmbedder : public PhraseEmbedder {
 public:
  explicit BackboneEmbedder(TextBackbone& backbone) : backbone_(backbone) {}
  Eigen::VectorXd Embed(const std::string& text) override;

 private:
  TextBackbone& backbone_;
};

// Fixed text -> vector table, for planted corpora and precomputed vectors.
class TableEmbedder : public PhraseEmbedder {
 public:
  void Set(const std::string& text, Eigen::VectorXd vector);
  Eigen::VectorXd Embed(const std::string& text) override;

 private:
  std::map<std::string, Eigen::VectorXd> table_;
};

double CosineSimilarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct FilterOutcome {
  std::vector<PhraseSample> kept;
  int dropped = 0;
  int zero_norm_skipped = 0;
};

// Keeps samples whose best cosine similarity against the four query texts
// reaches tau and records the winning type and score. Ties go to the type
// listed first.
FilterOutcome FilterBySimilarity(std::span<const PhraseSample> corpus,
                                 std::span<const QuerySpec> queries,
                                 PhraseEmbedder& embedder, double tau);

// One copy per sample with the phrase replaced by the matched type's query.
std::vector<PhraseSample> ReplaceQueries(std::span<const PhraseSample> samples,
                                         std::span<const QuerySpec> queries);

struct SplitRatio {
  double train = 9.0;
  double val = 0.5;
  double test = 0.5;
};

struct CorpusSplits {
  std::vector<PhraseSample> train;
  std::vector<PhraseSample> val;
  std::vector<PhraseSample> test;
};

// Split sizes for n items; boundaries are rounded cumulative proportions.
std::array<size_t, 3> SplitSizes(size_t n, const SplitRatio& ratio);

// Stable-sorts by id, shuffles with the seed, then cuts at SplitSizes.
CorpusSplits MergeAndSplit(std::vector<PhraseSample> merged,
                           const SplitRatio& ratio, unsigned long long seed);

struct WeakCorpus {
  CorpusSplits splits;
  int kept = 0;
  int dropped = 0;
  int zero_norm_skipped = 0;
  int in_domain = 0;
};

// Filter, then merge the kept samples, one query-replaced copy of each and
// the in-domain samples before splitting.
WeakCorpus BuildWeakCorpus(std::span<const PhraseSample> external,
                           std::span<const PhraseSample> in_domain,
                           std::span<const QuerySpec> queries,
                           PhraseEmbedder& embedder, double tau,
                           const SplitRatio& ratio, unsigned long long seed);

// Tab-separated records:
//   image  phrase  x1  y1  x2  y2  width  height  [type | origin  type]
// Ids are "<prefix>:<line>" with the line number zero padded.
std::vector<PhraseSample> ParsePhraseCorpus(std::string_view contents,
                                            const std::string& prefix,
                                            SampleOrigin default_origin);
std::vector<PhraseSample> LoadPhraseCorpus(const std::string& path,
                                           SampleOrigin default_origin);
std::string FormatPhraseCorpus(std::span<const PhraseSample> samples);
void SavePhraseCorpus(const std::string& path,
                      std::span<const PhraseSample> samples);

}  // namespace spanground

#endif  // SPANGROUND_WEAKSUP_WEAKSUP_H_
