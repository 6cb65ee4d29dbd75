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

#include "harness/joint_model.h"

#include <cmath>

#include "core/error.h"
#include "nn/ops.h"

namespace spanground {

struct JointModel::Forward {
  TextLayout layout;
  InteractionState state;
  nn::Var exist_logits;
  nn::Var start_logits;
  nn::Var end_logits;
  std::vector<nn::Var> raw_boxes;
};

JointModel::JointModel(const RunConfig& config)
    : config_(config), anchors_(AnchorSet::Standard(config.model.anchors)) {
  config_.Validate();
  std::mt19937_64 rng(config_.seed);
  const ModelConfig& m = config_.model;
  text_ = std::make_unique<TextEncoder>(
      store_, m, MakeTextBackbone(m.encoder, store_, m, rng), rng);
  image_ = std::make_unique<ImageEncoder>(
      store_, m, MakeVisualBackbone(m.encoder, store_, m, rng), rng);
  fusion_ = std::make_unique<Fusion>(store_, m, rng);
  existence_ = std::make_unique<ExistenceInteraction>(store_, m, rng);
  grounding_ = std::make_unique<GroundingHead>(store_, m, rng);
  heads_ = std::make_unique<SpanHeads>(store_, m, rng);
}

JointModel::Forward JointModel::RunInstance(
    const QueryInstance& instance, const ExamplePair& example,
    const PyramidKeys& keys, const std::vector<nn::Var>& projected,
    bool training, std::mt19937_64& rng) {
  Forward f;
  TextEncoding enc =
      text_->Encode(instance.query_tokens, example.tokens, training, rng);
  f.layout = std::move(enc.layout);
  const FusedState fused = fusion_->Forward(
      enc.h_prime, f.layout.query_begin, f.layout.query_length, keys);
  f.state = existence_->Forward(fused.h_u, fused.h_g);
  f.exist_logits = heads_->ExistenceLogits(f.state.h_tilde_g);
  f.start_logits = heads_->StartLogits(f.state.h_tilde_s);
  f.end_logits = heads_->EndLogits(f.state.h_tilde_e);
  f.raw_boxes =
      grounding_->PredictOffsets(grounding_->FuseProjected(fused.q, projected));
  return f;
}

namespace {

struct ImageContext {
  PyramidKeys keys;
  std::vector<nn::Var> projected;
};

nn::Var Mean(const std::vector<nn::Var>& parts) {
  nn::Var total = parts[0];
  for (size_t i = 1; i < parts.size(); ++i) total = nn::Add(total, parts[i]);
  return nn::Scale(total, 1.0 / static_cast<double>(parts.size()));
}

}  // namespace

BatchLosses JointModel::Losses(std::span<const LoadedExample* const> batch,
                               bool training, std::mt19937_64& rng) {
  if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "empty batch");
  std::vector<ImageTensor> images;
  images.reserve(batch.size());
  for (const LoadedExample* e : batch) images.push_back(e->image);
  const std::vector<VisualPyramid> pyramids =
      image_->Encode(images, training, rng);

  std::vector<nn::Var> qg, ed, esp;
  for (size_t b = 0; b < batch.size(); ++b) {
    const ExamplePair& example = batch[b]->pair;
    ImageContext ctx;
    ctx.keys = fusion_->ProjectPyramid(pyramids[b]);
    ctx.projected = grounding_->ProjectVisual(pyramids[b].maps);
    for (const QueryInstance& inst :
         BuildInstances(example, bank_, config_.query_strategy,
                        config_.require_boxes)) {
      const Forward f =
          RunInstance(inst, example, ctx.keys, ctx.projected, training, rng);
      const TextLayout& layout = f.layout;
      const int c = layout.length();

      std::vector<int> start_labels(c, 0), end_labels(c, 0);
      std::vector<double> mask(c, 0.0);
      for (int p = 0; p < layout.sentence_length; ++p) {
        mask[layout.sentence_begin + p] = 1.0;
      }
      std::vector<PositionPair> gold;
      for (const EntitySpan& s : inst.gold_spans) {
        const int i = layout.token_positions[s.start].first;
        const int j = layout.token_positions[s.end].second;
        start_labels[i] = 1;
        end_labels[j] = 1;
        gold.emplace_back(i, j);
      }
      std::vector<int> predicted_starts, predicted_ends;
      const nn::Matrix& sl = f.start_logits.value();
      const nn::Matrix& el = f.end_logits.value();
      for (int p = 0; p < c; ++p) {
        if (mask[p] == 0.0) continue;
        if (sl(p, 1) > sl(p, 0)) predicted_starts.push_back(p);
        if (el(p, 1) > el(p, 0)) predicted_ends.push_back(p);
      }
      const MatchPairs pairs =
          BuildMatchPairs(gold, predicted_starts, predicted_ends,
                          config_.decode.max_span_length, rng);
      nn::Var match_logits;
      if (!pairs.pairs.empty()) {
        match_logits = heads_->MatchLogits(f.state.h_tilde_s, f.state.h_tilde_e,
                                           pairs.pairs);
      }
      const EspLoss loss =
          ComputeEspLoss(f.start_logits, f.end_logits, start_labels,
                         end_labels, mask, match_logits, pairs.targets);
      esp.push_back(loss.total);
      ed.push_back(ComputeEdLoss(f.exist_logits, inst.exists));
      qg.push_back(ComputeQgLoss(f.raw_boxes, inst.gold_box, anchors_).total);
    }
  }
  BatchLosses out;
  out.qg = Mean(qg);
  out.ed = Mean(ed);
  out.esp = Mean(esp);
  out.instances = static_cast<int>(qg.size());
  return out;
}

std::vector<InstancePrediction> JointModel::Predict(
    std::span<const LoadedExample* const> batch) {
  nn::NoGradGuard no_grad;
  std::mt19937_64 unused(0);
  std::vector<ImageTensor> images;
  for (const LoadedExample* e : batch) images.push_back(e->image);
  const std::vector<VisualPyramid> pyramids =
      image_->Encode(images, false, unused);

  std::vector<InstancePrediction> out;
  for (size_t b = 0; b < batch.size(); ++b) {
    const ExamplePair& example = batch[b]->pair;
    const PyramidKeys keys = fusion_->ProjectPyramid(pyramids[b]);
    const std::vector<nn::Var> projected =
        grounding_->ProjectVisual(pyramids[b].maps);
    for (const QueryInstance& inst :
         BuildInstances(example, bank_, config_.query_strategy, false)) {
      const Forward f =
          RunInstance(inst, example, keys, projected, false, unused);
      const TextLayout& layout = f.layout;
      const int c = layout.length();

      // Boundaries may only fall on the first piece (start) or last piece
      // (end) of a sentence token.
      const nn::Matrix p_start = SoftmaxRows(f.start_logits.value());
      const nn::Matrix p_end = SoftmaxRows(f.end_logits.value());
      std::vector<double> start_prob(c, 0.0), end_prob(c, 0.0);
      std::vector<int> start_token(c, -1), end_token(c, -1);
      for (size_t t = 0; t < layout.token_positions.size(); ++t) {
        const auto [first, last] = layout.token_positions[t];
        start_prob[first] = p_start(first, 1);
        end_prob[last] = p_end(last, 1);
        start_token[first] = static_cast<int>(t);
        end_token[last] = static_cast<int>(t);
      }
      const nn::Matrix& hs = f.state.h_tilde_s.value();
      const nn::Matrix& he = f.state.h_tilde_e.value();
      const Eigen::VectorXd w = heads_->match_weight().value().col(0);
      const auto match = [&](int i, int j) {
        return MatchProbability(hs.row(i), he.row(j), w, i, j);
      };

      InstancePrediction pred;
      pred.example_id = example.id;
      pred.type = inst.type;
      for (const auto& [i, j] :
           ExtractSpans(start_prob, end_prob, match, config_.decode)) {
        pred.spans.push_back({start_token[i], end_token[j], inst.type});
      }
      std::vector<nn::Matrix> raw;
      for (const nn::Var& r : f.raw_boxes) raw.push_back(r.value());
      pred.box = SelectBox(raw, anchors_);
      pred.exist_probability = SoftmaxRows(f.exist_logits.value())(0, 1);
      out.push_back(std::move(pred));
    }
  }
  return out;
}

}  // namespace spanground
