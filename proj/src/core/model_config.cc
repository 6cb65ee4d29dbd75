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

#include "core/model_config.h"

#include <sstream>

namespace spanground {

std::string ModelConfig::Describe() const {
  std::ostringstream out;
  out << "hidden=" << hidden << ";heads=" << heads << ";encoder=" << encoder
      << ";text_hidden=" << text_hidden << ";text_layers=" << text_layers
      << ";text_heads=" << text_heads
      << ";text_vocab_buckets=" << text_vocab_buckets
      << ";max_text_length=" << max_text_length << ";visual_channels="
      << visual_channels[0] << "," << visual_channels[1] << ","
      << visual_channels[2]
      << ";share_scale_attention=" << share_scale_attention
      << ";existence_context=" << static_cast<int>(existence_context)
      << ";anchors=";
  for (const AnchorPrior& a : anchors) out << a.width << "x" << a.height << ",";
  return out.str();
}

unsigned long long ModelConfig::Hash() const {
  // FNV-1a, stable across platforms and runs.
  unsigned long long h = 1469598103934665603ULL;
  for (unsigned char c : Describe()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace spanground
