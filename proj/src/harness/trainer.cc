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

#include "harness/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "core/error.h"

namespace spanground {

namespace fs = std::filesystem;

namespace {

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void CheckFinite(double value, const char* name, long step) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::kNumerical, "non-finite " + std::string(name) +
                                           " at step " + std::to_string(step));
  }
}

void AppendLine(const fs::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::app);
  out << line << "\n";
  if (!out) throw Error(ErrorCode::kIoError, "cannot append to " + path.string());
}

bool HasType(const ExamplePair& example, EntityType type) {
  return std::any_of(example.gold_entities.begin(), example.gold_entities.end(),
                     [&](const EntitySpan& s) { return s.type == type; });
}

}  // namespace

std::string FormatStepRecord(const StepRecord& r) {
  return "step=" + std::to_string(r.step) + " epoch=" + std::to_string(r.epoch) +
         " lr=" + Num(r.lr) + " L_QG=" + Num(r.qg) + " L_ED=" + Num(r.ed) +
         " L_ESP=" + Num(r.esp) + " omega=" + Num(r.omega) +
         " total=" + Num(r.total);
}

StepRecord ParseStepRecord(std::string_view line) {
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(line)};
  std::string item;
  while (in >> item) {
    const size_t eq = item.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kDataError, "malformed step record: " + item);
    }
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  auto get = [&](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end()) {
      throw Error(ErrorCode::kDataError,
                  "step record lacks " + std::string(key));
    }
    return it->second;
  };
  StepRecord r;
  r.step = std::stol(get("step"));
  r.epoch = std::stoi(get("epoch"));
  r.lr = std::stod(get("lr"));
  r.qg = std::stod(get("L_QG"));
  r.ed = std::stod(get("L_ED"));
  r.esp = std::stod(get("L_ESP"));
  r.omega = std::stod(get("omega"));
  r.total = std::stod(get("total"));
  return r;
}

Trainer::Trainer(JointModel& model)
    : model_(model),
      optimizer_(model.params(),
                 nn::AdamW::Options{model.config().learning_rate, 0.9, 0.999,
                                    1e-8, model.config().weight_decay}),
      rng_(model.config().seed ^ 0x9e3779b97f4a7c15ULL) {
  balance_.set_override(model.config().omega_override);
}

long Trainer::total_steps(size_t train_size) const {
  const RunConfig& c = model_.config();
  if (c.max_steps > 0) return c.max_steps;
  const long per_epoch =
      static_cast<long>((train_size + c.batch_size - 1) / c.batch_size);
  return per_epoch * c.epochs;
}

double Trainer::LearningRate(long step) const {
  const RunConfig& c = model_.config();
  const long warmup = static_cast<long>(
      std::floor(c.warmup_fraction * static_cast<double>(planned_steps_)));
  if (step < warmup) {
    return c.learning_rate * static_cast<double>(step + 1) /
           static_cast<double>(warmup);
  }
  return c.learning_rate;
}

StepRecord Trainer::Step(std::span<const LoadedExample* const> batch) {
  const RunConfig& c = model_.config();
  model_.params().ZeroGrad();
  const BatchLosses losses = model_.Losses(batch, true, rng_);
  StepRecord r;
  r.step = step_;
  r.epoch = epoch_;
  r.qg = losses.qg.scalar();
  r.ed = losses.ed.scalar();
  r.esp = losses.esp.scalar();
  CheckFinite(r.qg, "L_QG", step_);
  CheckFinite(r.ed, "L_ED", step_);
  CheckFinite(r.esp, "L_ESP", step_);
  r.omega = balance_.Update(r.esp, r.qg);
  const nn::Var total =
      TotalLoss(losses.qg, losses.ed, losses.esp, r.omega, c.loss);
  r.total = total.scalar();
  CheckFinite(r.total, "total loss", step_);
  nn::Backward(total);
  r.lr = LearningRate(step_);
  optimizer_.Step(r.lr);
  ++step_;
  return r;
}

TrainResult Trainer::Train(const Dataset& train, const Dataset* dev,
                           const TrainOptions& options) {
  const RunConfig& c = model_.config();
  if (train.examples.empty()) {
    throw Error(ErrorCode::kDataError, "training split is empty");
  }
  planned_steps_ = total_steps(train.examples.size());
  fs::path out_dir;
  if (!options.out_dir.empty()) {
    out_dir = options.out_dir;
    fs::create_directories(out_dir);
    std::ofstream cfg(out_dir / "config.txt");
    cfg << c.Format();
  }
  auto save = [&](const std::string& name) {
    if (out_dir.empty()) return;
    const TrainingState state = State();
    WriteCheckpoint((out_dir / name).string(),
                    CaptureCheckpoint(model_, &state));
  };

  const std::vector<const LoadedExample*> all = Pointers(train);
  TrainResult result;
  bool done = false;
  while (epoch_ < c.epochs && !done) {
    std::vector<size_t> order(all.size());
    std::iota(order.begin(), order.end(), 0);
    for (size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[rng_() % (i + 1)]);
    }
    for (size_t b = 0; b < order.size(); b += c.batch_size) {
      if (c.max_steps > 0 && step_ >= c.max_steps) {
        done = true;
        break;
      }
      std::vector<const LoadedExample*> batch;
      for (size_t k = b; k < std::min(order.size(), b + c.batch_size); ++k) {
        batch.push_back(all[order[k]]);
      }
      const StepRecord r = Step(batch);
      result.log.push_back(r);
      if (!out_dir.empty()) AppendLine(out_dir / "train_log.txt", FormatStepRecord(r));
      if (options.on_step) options.on_step(r);
    }
    if (c.max_steps > 0 && step_ >= c.max_steps) done = true;
    ++epoch_;
    ++result.epochs_run;

    if (dev != nullptr && !dev->examples.empty()) {
      const EvalReport report = Evaluate(model_, *dev, c.batch_size).report;
      if (options.on_epoch) options.on_epoch(epoch_, report);
      if (report.f1 > best_dev_f1_) {
        best_dev_f1_ = report.f1;
        epochs_without_improvement_ = 0;
        save("best.ckpt");
      } else if (++epochs_without_improvement_ >= c.patience) {
        result.early_stopped = true;
        done = true;
      }
    }
    if (epoch_ % c.checkpoint_every == 0) {
      save("epoch-" + std::to_string(epoch_) + ".ckpt");
    }
  }
  save("last.ckpt");
  result.best_dev_f1 = best_dev_f1_;
  return result;
}

TrainingState Trainer::State() const {
  TrainingState t;
  t.step = step_;
  t.epoch = epoch_;
  t.adam_step = optimizer_.step_count();
  t.first_moments = optimizer_.first_moments();
  t.second_moments = optimizer_.second_moments();
  std::ostringstream rng;
  rng << rng_;
  t.rng_state = rng.str();
  t.omega = balance_.current();
  t.omega_fallbacks = balance_.fallbacks();
  t.best_dev_f1 = best_dev_f1_;
  t.epochs_without_improvement = epochs_without_improvement_;
  return t;
}

void Trainer::Restore(const TrainingState& t) {
  if (t.first_moments.size() != optimizer_.first_moments().size()) {
    throw Error(ErrorCode::kMismatch, "optimizer state size differs");
  }
  step_ = t.step;
  epoch_ = t.epoch;
  optimizer_.set_step_count(t.adam_step);
  optimizer_.first_moments() = t.first_moments;
  optimizer_.second_moments() = t.second_moments;
  std::istringstream rng(t.rng_state);
  rng >> rng_;
  if (!rng) throw Error(ErrorCode::kDataError, "corrupt random state");
  balance_.Restore(t.omega, t.omega_fallbacks);
  best_dev_f1_ = t.best_dev_f1;
  epochs_without_improvement_ = t.epochs_without_improvement;
}

std::vector<const LoadedExample*> Pointers(const Dataset& data) {
  std::vector<const LoadedExample*> out;
  for (const LoadedExample& e : data.examples) out.push_back(&e);
  return out;
}

BatchLosses EvalLosses(JointModel& model,
                       std::span<const LoadedExample* const> batch) {
  nn::NoGradGuard no_grad;
  std::mt19937_64 rng(0);
  return model.Losses(batch, false, rng);
}

Evaluation Evaluate(JointModel& model, const Dataset& data, int batch_size) {
  if (data.examples.empty()) {
    throw Error(ErrorCode::kDataError, "evaluation split is empty");
  }
  Evaluation out;
  EvalAccumulator acc;
  const std::vector<const LoadedExample*> all = Pointers(data);
  for (size_t b = 0; b < all.size(); b += batch_size) {
    const size_t end = std::min(all.size(), b + static_cast<size_t>(batch_size));
    std::vector<const LoadedExample*> batch(all.begin() + b, all.begin() + end);
    std::vector<InstancePrediction> preds = model.Predict(batch);
    for (const LoadedExample* e : batch) {
      std::vector<EntitySpan> spans;
      for (const InstancePrediction& p : preds) {
        if (p.example_id != e->pair.id) continue;
        spans.insert(spans.end(), p.spans.begin(), p.spans.end());
        auto gold = e->pair.gold_boxes.find(p.type);
        const bool present = HasType(e->pair, p.type);
        if (gold != e->pair.gold_boxes.end()) {
          acc.AddBox(p.box.box, gold->second, present);
        } else if (!present) {
          // Absent types without an annotation ground to the whole image.
          acc.AddBox(p.box.box, BBox::WholeImage(), false);
        }
      }
      acc.AddSpans(spans, e->pair.gold_entities);
    }
    for (InstancePrediction& p : preds) out.predictions.push_back(std::move(p));
  }
  out.report = acc.Finish();
  return out;
}

std::string FormatPredictions(std::span<const InstancePrediction> predictions) {
  std::string out;
  for (const InstancePrediction& p : predictions) {
    nlohmann::json j;
    j["id"] = p.example_id;
    j["type"] = std::string(EntityTypeName(p.type));
    nlohmann::json spans = nlohmann::json::array();
    for (const EntitySpan& s : p.spans) spans.push_back({s.start, s.end});
    j["spans"] = spans;
    j["box"] = {p.box.box.x1, p.box.box.y1, p.box.box.x2, p.box.box.y2};
    j["confidence"] = p.box.confidence;
    j["exist_probability"] = p.exist_probability;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<InstancePrediction> ParsePredictions(std::string_view jsonl) {
  std::vector<InstancePrediction> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      InstancePrediction p;
      p.example_id = j.at("id").get<std::string>();
      p.type = ParseEntityType(j.at("type").get<std::string>());
      for (const auto& s : j.at("spans")) {
        p.spans.push_back({s.at(0).get<int>(), s.at(1).get<int>(), p.type});
      }
      const auto& b = j.at("box");
      p.box.box = {b.at(0).get<double>(), b.at(1).get<double>(),
                   b.at(2).get<double>(), b.at(3).get<double>()};
      p.box.confidence = j.at("confidence").get<double>();
      p.exist_probability = j.value("exist_probability", 0.0);
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kDataError, "predictions line " +
                                             std::to_string(line_no) + ": " +
                                             e.what());
    }
  }
  return out;
}

std::vector<std::string> RenderPredictions(
    const Dataset& data, std::span<const InstancePrediction> predictions,
    const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<std::string> written;
  for (const LoadedExample& e : data.examples) {
    const ImageTensor& img = e.image;
    if (img.height == 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "example " + e.pair.id + " has no image to render");
    }
    cv::Mat canvas(img.height, img.width, CV_8UC3);
    for (int y = 0; y < img.height; ++y) {
      auto* row = canvas.ptr<cv::Vec3b>(y);
      for (int x = 0; x < img.width; ++x) {
        for (int ch = 0; ch < 3; ++ch) {
          const double v = std::clamp(img.pixels(y * img.width + x, ch), 0.0, 1.0);
          row[x][2 - ch] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
      }
    }
    const double sx = img.width / kFrameSize, sy = img.height / kFrameSize;
    auto draw = [&](const BBox& b, const cv::Scalar& color,
                    const std::string& label) {
      const cv::Point p1(static_cast<int>(b.x1 * sx), static_cast<int>(b.y1 * sy));
      const cv::Point p2(static_cast<int>(b.x2 * sx) - 1,
                         static_cast<int>(b.y2 * sy) - 1);
      cv::rectangle(canvas, p1, p2, color, 1);
      cv::putText(canvas, label, p1 + cv::Point(2, 10), cv::FONT_HERSHEY_PLAIN,
                  0.8, color, 1);
    };
    for (const auto& [type, box] : e.pair.gold_boxes) {
      if (box == BBox::WholeImage()) continue;
      draw(box, cv::Scalar(0, 200, 0), std::string(EntityTypeName(type)));
    }
    for (const InstancePrediction& p : predictions) {
      if (p.example_id != e.pair.id) continue;
      if (p.spans.empty() && p.box.box == BBox::WholeImage()) continue;
      char label[48];
      std::snprintf(label, sizeof(label), "%s %.2f",
                    std::string(EntityTypeName(p.type)).c_str(),
                    p.box.confidence);
      draw(p.box.box, cv::Scalar(0, 0, 220), label);
    }
    const std::string path = (fs::path(out_dir) / (e.pair.id + ".png")).string();
    if (!cv::imwrite(path, canvas)) {
      throw Error(ErrorCode::kIoError, "cannot write " + path);
    }
    written.push_back(path);
  }
  return written;
}

}  // namespace spanground
