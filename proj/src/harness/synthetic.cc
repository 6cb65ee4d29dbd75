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

#include "harness/synthetic.h"

#include <algorithm>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <opencv2/imgproc.hpp>

#include "core/error.h"
#include "grounding/grounding.h"

namespace spanground {

namespace {

const std::vector<std::string> kFiller = {
    "the", "a",     "today", "with",  "at",   "new", "photo", "great",
    "we",  "saw",   "from",  "big",   "nice", "of",  "show",  "game",
    "and", "after", "more",  "night", "just", "our", "love",  "day"};

const std::vector<std::vector<std::string>> kNames = {
    {"alice", "bob", "carol", "dave", "erin", "frank", "grace", "heidi"},
    {"paris", "london", "tokyo", "berlin", "madrid", "oslo", "rome", "lima"},
    {"acme", "globex", "initech", "umbrella", "hooli", "vandelay", "wonka",
     "stark"},
    {"olympics", "oscars", "superbowl", "eurovision", "wimbledon", "comiccon",
     "worldcup", "grammys"}};

// RGB block color per type, in 1/255 steps.
const int kColors[4][3] = {
    {220, 40, 40}, {40, 60, 220}, {40, 180, 60}, {230, 200, 40}};

int Uniform(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<unsigned long long>(hi - lo + 1));
}

}  // namespace

Dataset MakeSyntheticDataset(const SyntheticOptions& options, Split split) {
  if (options.examples <= 0 || options.image_size < 16) {
    throw Error(ErrorCode::kInvalidArgument, "bad synthetic dataset options");
  }
  std::mt19937_64 rng(options.seed);
  const int size = options.image_size;
  const int frame = static_cast<int>(kFrameSize);
  Dataset data;
  for (int n = 0; n < options.examples; ++n) {
    LoadedExample ex;
    char id[32];
    std::snprintf(id, sizeof(id), "syn-%04d", n);
    ex.pair.id = id;
    ex.pair.image_ref = std::string(id) + ".png";
    ex.pair.split = split;

    // One or both types; each mentioned by a one- or two-word name.
    std::vector<EntityType> present;
    const int pick = Uniform(rng, 0, 2);
    if (pick != 1) present.push_back(options.types[0]);
    if (pick != 0) present.push_back(options.types[1]);

    const int length = Uniform(rng, 6, 10);
    std::vector<std::string> tokens;
    for (int i = 0; i < length; ++i) {
      tokens.push_back(kFiller[Uniform(rng, 0, static_cast<int>(kFiller.size()) - 1)]);
    }
    // Place entities in disjoint halves so they never overlap.
    for (size_t k = 0; k < present.size(); ++k) {
      const int span = Uniform(rng, 1, 2);
      const int half_begin = present.size() == 1 ? 0 : static_cast<int>(k) * (length / 2);
      const int half_end = present.size() == 1 ? length : half_begin + length / 2;
      const int start = Uniform(rng, half_begin, half_end - span);
      const auto& names = kNames[static_cast<int>(present[k])];
      for (int t = 0; t < span; ++t) {
        tokens[start + t] = names[Uniform(rng, 0, static_cast<int>(names.size()) - 1)];
      }
      ex.pair.gold_entities.push_back({start, start + span - 1, present[k]});
    }
    std::sort(ex.pair.gold_entities.begin(), ex.pair.gold_entities.end());
    ex.pair.tokens = tokens;

    // Small-canvas drawing, upscaled with nearest neighbour so every pixel
    // value stays a multiple of 1/255.
    cv::Mat canvas(size, size, CV_8UC3);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const int g = 150 + Uniform(rng, 0, 30);
        canvas.at<cv::Vec3b>(y, x) = cv::Vec3b(g, g, g);
      }
    }
    std::vector<cv::Rect> placed;
    for (EntityType t : kAllEntityTypes) ex.pair.gold_boxes[t] = BBox::WholeImage();
    for (EntityType t : present) {
      cv::Rect r;
      for (int attempt = 0; attempt < 100; ++attempt) {
        const int w = Uniform(rng, size / 5, size / 2);
        const int h = Uniform(rng, size / 5, size / 2);
        r = cv::Rect(Uniform(rng, 0, size - w), Uniform(rng, 0, size - h), w, h);
        bool clear = true;
        for (const cv::Rect& o : placed) clear = clear && (r & o).area() == 0;
        if (clear) break;
      }
      placed.push_back(r);
      const int* c = kColors[static_cast<int>(t)];
      cv::rectangle(canvas, r, cv::Scalar(c[2], c[1], c[0]), cv::FILLED);
      const double s = static_cast<double>(frame) / size;
      ex.pair.gold_boxes[t] = {r.x * s, r.y * s, (r.x + r.width) * s,
                               (r.y + r.height) * s};
    }
    cv::Mat scaled;
    cv::resize(canvas, scaled, cv::Size(frame, frame), 0, 0, cv::INTER_NEAREST);
    ex.image.height = frame;
    ex.image.width = frame;
    ex.image.pixels.resize(static_cast<Eigen::Index>(frame) * frame, 3);
    for (int y = 0; y < frame; ++y) {
      const auto* row = scaled.ptr<cv::Vec3b>(y);
      for (int x = 0; x < frame; ++x) {
        for (int ch = 0; ch < 3; ++ch) {
          ex.image.pixels(y * frame + x, ch) = row[x][2 - ch] / 255.0;
        }
      }
    }
    ex.pair.Validate();
    data.examples.push_back(std::move(ex));
  }
  std::vector<ExamplePair> pairs;
  for (const LoadedExample& e : data.examples) pairs.push_back(e.pair);
  data.entity_counts = CountEntities(pairs);
  return data;
}

RunConfig SyntheticRunConfig(const Dataset& train, unsigned long long seed) {
  RunConfig c;
  ModelConfig& m = c.model;
  m.hidden = 64;
  m.heads = 4;
  m.dropout = 0.0;
  m.text_hidden = 64;
  m.text_layers = 1;
  m.text_heads = 4;
  m.text_vocab_buckets = 512;
  m.max_text_length = 128;
  m.visual_channels = {32, 32, 32};
  std::vector<BBox> boxes;
  for (const LoadedExample& e : train.examples) {
    for (const auto& [type, box] : e.pair.gold_boxes) boxes.push_back(box);
  }
  if (!boxes.empty()) m.anchors = EstimateAnchorPriors(boxes, seed);
  c.learning_rate = 3e-3;
  c.weight_decay = 0.0;
  c.warmup_fraction = 0.05;
  c.batch_size = 4;
  c.epochs = 1000;
  c.max_steps = 500;
  c.patience = 1000;
  c.checkpoint_every = 1000;
  c.seed = seed;
  c.omega_override = 1.0;
  return c;
}

}  // namespace spanground
