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

#ifndef SPANGROUND_ENCODERS_TEXT_ENCODER_H_
#define SPANGROUND_ENCODERS_TEXT_ENCODER_H_

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "core/model_config.h"
#include "nn/layers.h"

namespace spanground {

// Encoder input laid out as [CLS] Q [SEP] S [SEP].
struct TextLayout {
  std::vector<int> ids;
  std::vector<int> segments;  // 0 for [CLS] Q [SEP], 1 for S [SEP]
  int query_begin = 1;
  int query_length = 0;  // encoder positions covered by the query
  int sentence_begin = 0;
  int sentence_length = 0;
  // Inclusive encoder position range of each sentence token.
  std::vector<std::pair<int, int>> token_positions;

  int length() const { return static_cast<int>(ids.size()); }
};

struct TextEncoding {
  nn::Var h_prime;  // c x d
  TextLayout layout;
};

// Contract for contextual text encoders. A pretrained adapter supplies its
// own subword tokenizer, special-token ids and hidden size d_c, and returns
// the c x d_c contextual representation for a layout.
class TextBackbone {
 public:
  virtual ~TextBackbone() = default;
  virtual std::vector<int> Tokenize(const std::string& word) const = 0;
  virtual int cls_id() const = 0;
  virtual int sep_id() const = 0;
  virtual int hidden_size() const = 0;
  virtual int max_length() const = 0;
  virtual nn::Var Encode(const TextLayout& layout, bool training) = 0;
};

using TextBackboneFactory = std::function<std::unique_ptr<TextBackbone>(
    nn::ParamStore&, const ModelConfig&, std::mt19937_64&)>;

void RegisterTextBackbone(const std::string& name, TextBackboneFactory factory);
// Throws Error(kNotFound) for an unregistered backend name.
std::unique_ptr<TextBackbone> MakeTextBackbone(const std::string& name,
                                               nn::ParamStore& store,
                                               const ModelConfig& config,
                                               std::mt19937_64& rng);

// Small transformer: hashed word embeddings plus position and segment
// embeddings, followed by post-norm self-attention blocks.
class ReferenceTextBackbone : public TextBackbone {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kClsId = 1;
  static constexpr int kSepId = 2;

  ReferenceTextBackbone(nn::ParamStore& store, const ModelConfig& config,
                        std::mt19937_64& rng);

  std::vector<int> Tokenize(const std::string& word) const override;
  int cls_id() const override { return kClsId; }
  int sep_id() const override { return kSepId; }
  int hidden_size() const override { return hidden_; }
  int max_length() const override { return max_length_; }
  nn::Var Encode(const TextLayout& layout, bool training) override;

 private:
  struct Block {
    nn::MultiHeadAttention attention;
    nn::LayerNorm norm1;
    nn::Linear ffn_in;
    nn::Linear ffn_out;
    nn::LayerNorm norm2;
  };

  int hidden_;
  int buckets_;
  int max_length_;
  nn::Var token_embedding_;
  nn::Var position_embedding_;
  nn::Var segment_embedding_;
  nn::LayerNorm embedding_norm_;
  std::vector<Block> blocks_;
};

// Backbone followed by the linear projection d_c -> d and dropout.
class TextEncoder {
 public:
  TextEncoder(nn::ParamStore& store, const ModelConfig& config,
              std::unique_ptr<TextBackbone> backbone, std::mt19937_64& rng);

  // Throws Error(kInvalidArgument) on empty inputs or when the combined
  // length exceeds the backbone limit; sentence tokens are never truncated.
  TextLayout Layout(const std::vector<std::string>& query_tokens,
                    const std::vector<std::string>& sentence_tokens) const;

  TextEncoding Encode(const std::vector<std::string>& query_tokens,
                      const std::vector<std::string>& sentence_tokens,
                      bool training, std::mt19937_64& rng);
  nn::Var Contextual(const TextLayout& layout, bool training);
  nn::Var Project(const nn::Var& contextual, bool training,
                  std::mt19937_64& rng) const;

  TextBackbone& backbone() { return *backbone_; }
  const nn::Linear& projection() const { return projection_; }

 private:
  std::unique_ptr<TextBackbone> backbone_;
  nn::Linear projection_;
  double dropout_;
  bool freeze_;
};

}  // namespace spanground

#endif  // SPANGROUND_ENCODERS_TEXT_ENCODER_H_
