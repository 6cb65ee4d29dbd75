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

#include "encoders/text_encoder.h"

#include <cctype>
#include <map>
#include <mutex>

#include "core/error.h"

namespace spanground {

namespace {

std::map<std::string, TextBackboneFactory>& Registry() {
  static std::map<std::string, TextBackboneFactory> registry = {
      {"reference",
       [](nn::ParamStore& store, const ModelConfig& config,
          std::mt19937_64& rng) -> std::unique_ptr<TextBackbone> {
         return std::make_unique<ReferenceTextBackbone>(store, config, rng);
       }}};
  return registry;
}

std::mutex registry_mutex;

}  // namespace

void RegisterTextBackbone(const std::string& name,
                          TextBackboneFactory factory) {
  std::lock_guard<std::mutex> lock(registry_mutex);
  Registry()[name] = std::move(factory);
}

std::unique_ptr<TextBackbone> MakeTextBackbone(const std::string& name,
                                               nn::ParamStore& store,
                                               const ModelConfig& config,
                                               std::mt19937_64& rng) {
  TextBackboneFactory factory;
  {
    std::lock_guard<std::mutex> lock(registry_mutex);
    auto it = Registry().find(name);
    if (it == Registry().end()) {
      throw Error(ErrorCode::kNotFound,
                  "no text backbone registered under '" + name +
                      "'; a pretrained adapter must be registered before use");
    }
    factory = it->second;
  }
  return factory(store, config, rng);
}

ReferenceTextBackbone::ReferenceTextBackbone(nn::ParamStore& store,
                                             const ModelConfig& config,
                                             std::mt19937_64& rng)
    : hidden_(config.text_hidden),
      buckets_(config.text_vocab_buckets),
      max_length_(config.max_text_length) {
  if (buckets_ <= 3) {
    throw Error(ErrorCode::kInvalidArgument, "text_vocab_buckets must be > 3");
  }
  token_embedding_ = store.Create("text.token_embedding",
                                  nn::NormalInit(buckets_, hidden_, 0.1, rng));
  position_embedding_ = store.Create(
      "text.position_embedding", nn::NormalInit(max_length_, hidden_, 0.1, rng));
  segment_embedding_ = store.Create("text.segment_embedding",
                                    nn::NormalInit(2, hidden_, 0.1, rng));
  embedding_norm_ = nn::LayerNorm::Create(store, "text.embedding_norm", hidden_);
  for (int l = 0; l < config.text_layers; ++l) {
    const std::string p = "text.block" + std::to_string(l);
    Block b;
    b.attention = nn::MultiHeadAttention(store, p + ".attention", hidden_,
                                         config.text_heads, rng);
    b.norm1 = nn::LayerNorm::Create(store, p + ".norm1", hidden_);
    b.ffn_in = nn::Linear::Create(store, p + ".ffn_in", hidden_, 2 * hidden_, rng);
    b.ffn_out =
        nn::Linear::Create(store, p + ".ffn_out", 2 * hidden_, hidden_, rng);
    b.norm2 = nn::LayerNorm::Create(store, p + ".norm2", hidden_);
    blocks_.push_back(std::move(b));
  }
}

std::vector<int> ReferenceTextBackbone::Tokenize(const std::string& word) const {
  // One id per word: FNV-1a of the lowercased word into the non-special
  // buckets.
  unsigned long long h = 1469598103934665603ULL;
  for (unsigned char c : word) {
    h ^= static_cast<unsigned char>(std::tolower(c));
    h *= 1099511628211ULL;
  }
  return {3 + static_cast<int>(h % static_cast<unsigned long long>(buckets_ - 3))};
}

nn::Var ReferenceTextBackbone::Encode(const TextLayout& layout, bool training) {
  (void)training;
  std::vector<int> positions(layout.ids.size());
  for (size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i);
  nn::Var x = nn::Add(nn::GatherRows(token_embedding_, layout.ids),
                      nn::GatherRows(position_embedding_, positions));
  x = nn::Add(x, nn::GatherRows(segment_embedding_, layout.segments));
  x = embedding_norm_.Forward(x);
  for (const Block& b : blocks_) {
    x = b.norm1.Forward(nn::Add(x, b.attention.Forward(x, x)));
    nn::Var f = b.ffn_out.Forward(nn::Relu(b.ffn_in.Forward(x)));
    x = b.norm2.Forward(nn::Add(x, f));
  }
  return x;
}

TextEncoder::TextEncoder(nn::ParamStore& store, const ModelConfig& config,
                         std::unique_ptr<TextBackbone> backbone,
                         std::mt19937_64& rng)
    : backbone_(std::move(backbone)),
      dropout_(config.dropout),
      freeze_(config.freeze_text) {
  projection_ = nn::Linear::Create(store, "text.projection",
                                   backbone_->hidden_size(), config.hidden, rng);
}

TextLayout TextEncoder::Layout(
    const std::vector<std::string>& query_tokens,
    const std::vector<std::string>& sentence_tokens) const {
  if (query_tokens.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "query must be nonempty");
  }
  if (sentence_tokens.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "sentence must be nonempty");
  }
  TextLayout layout;
  layout.ids.push_back(backbone_->cls_id());
  layout.segments.push_back(0);
  layout.query_begin = 1;
  for (const std::string& w : query_tokens) {
    for (int id : backbone_->Tokenize(w)) {
      layout.ids.push_back(id);
      layout.segments.push_back(0);
    }
  }
  layout.query_length = layout.length() - 1;
  layout.ids.push_back(backbone_->sep_id());
  layout.segments.push_back(0);
  layout.sentence_begin = layout.length();
  for (const std::string& w : sentence_tokens) {
    const int first = layout.length();
    std::vector<int> pieces = backbone_->Tokenize(w);
    if (pieces.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "tokenizer produced no pieces for '" + w + "'");
    }
    for (int id : pieces) {
      layout.ids.push_back(id);
      layout.segments.push_back(1);
    }
    layout.token_positions.emplace_back(first, layout.length() - 1);
  }
  layout.sentence_length = layout.length() - layout.sentence_begin;
  layout.ids.push_back(backbone_->sep_id());
  layout.segments.push_back(1);
  if (layout.length() > backbone_->max_length()) {
    throw Error(ErrorCode::kInvalidArgument,
                "encoder input of " + std::to_string(layout.length()) +
                    " positions exceeds the limit of " +
                    std::to_string(backbone_->max_length()) +
                    "; refusing to truncate the sentence");
  }
  return layout;
}

nn::Var TextEncoder::Contextual(const TextLayout& layout, bool training) {
  nn::Var h = backbone_->Encode(layout, training);
  if (freeze_) return nn::Constant(h.value());
  return h;
}

nn::Var TextEncoder::Project(const nn::Var& contextual, bool training,
                             std::mt19937_64& rng) const {
  return nn::Dropout(projection_.Forward(contextual), dropout_, training, rng);
}

TextEncoding TextEncoder::Encode(const std::vector<std::string>& query_tokens,
                                 const std::vector<std::string>& sentence_tokens,
                                 bool training, std::mt19937_64& rng) {
  TextEncoding enc;
  enc.layout = Layout(query_tokens, sentence_tokens);
  enc.h_prime = Project(Contextual(enc.layout, training), training, rng);
  return enc;
}

}  // namespace spanground
