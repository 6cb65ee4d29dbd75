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

// Command-line front end over the C API.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spanground/spanground.h"

namespace {

namespace fs = std::filesystem;

// Thrown when a C call fails; main() prints it and exits with the status.
struct CallFailed {
  sg_status status;
  std::string message;
};

void Check(sg_status status) {
  if (status != SG_OK) throw CallFailed{status, sg_last_error()};
}

std::string Take(char* s) {
  std::string out(s);
  sg_string_free(s);
  return out;
}

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw CallFailed{SG_ERR_IO, "cannot write " + path.string()};
}

std::string ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CallFailed{SG_ERR_IO, "cannot open " + path};
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Handles released on scope exit.
template <typename T, void (*Free)(T*)>
class Handle {
 public:
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p_); }
  T** out() { return &p_; }
  T* get() const { return p_; }

 private:
  T* p_ = nullptr;
};

using Config = Handle<sg_config, sg_config_free>;
using DatasetH = Handle<sg_dataset, sg_dataset_free>;
using Model = Handle<sg_model, sg_model_free>;
using EvaluationH = Handle<sg_evaluation, sg_evaluation_free>;

struct Common {
  std::string config;
  std::string dataset;
  std::string split = "train";
  std::string encoder;
  std::string query_strategy;
  std::string out;
  std::string checkpoint;
  long long seed = -1;
  std::vector<std::string> sets;
};

void ApplyOverrides(const Common& c, sg_config* config) {
  if (c.seed >= 0) Check(sg_config_set(config, "seed", std::to_string(c.seed).c_str()));
  if (!c.encoder.empty()) Check(sg_config_set(config, "encoder", c.encoder.c_str()));
  if (!c.query_strategy.empty()) {
    Check(sg_config_set(config, "query_strategy", c.query_strategy.c_str()));
  }
  for (const std::string& kv : c.sets) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw CallFailed{SG_ERR_INVALID_ARGUMENT, "--set expects key=value, got " + kv};
    }
    Check(sg_config_set(config, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
  }
}

void LoadModel(const Common& c, Model& model) {
  if (!c.checkpoint.empty()) {
    Check(sg_model_load(c.checkpoint.c_str(),
                        c.encoder.empty() ? nullptr : c.encoder.c_str(),
                        model.out()));
    return;
  }
  Config config;
  if (c.config.empty()) {
    Check(sg_config_default(config.out()));
  } else {
    Check(sg_config_load(c.config.c_str(), config.out()));
  }
  ApplyOverrides(c, config.get());
  Check(sg_model_create(config.get(), model.out()));
}

void PrintCounts(const sg_dataset* data, const std::string& label) {
  std::printf("%s: %zu examples", label.c_str(), sg_dataset_size(data));
  for (const char* type : {"PER", "LOC", "ORG", "OTHER"}) {
    long n = 0;
    Check(sg_dataset_entity_count(data, type, &n));
    std::printf("  %s=%ld", type, n);
  }
  std::printf("\n");
}

void OnStep(const sg_step_record* r, void*) {
  std::printf(
      "step %ld epoch %d lr %.3g L_QG %.6g L_ED %.6g L_ESP %.6g omega %g "
      "total %.6g\n",
      r->step, r->epoch, r->lr, r->loss_qg, r->loss_ed, r->loss_esp, r->omega,
      r->total);
  std::fflush(stdout);
}

int Prepare(const Common& c, int synthetic) {
  DatasetH data;
  if (synthetic > 0) {
    if (c.out.empty()) throw CallFailed{SG_ERR_INVALID_ARGUMENT, "--out is required"};
    Check(sg_dataset_synthetic(synthetic, c.seed >= 0 ? c.seed : 7, data.out()));
    Check(sg_dataset_save(data.get(), c.out.c_str(), c.split.c_str()));
    PrintCounts(data.get(), "wrote " + c.out + " [" + c.split + "]");
    return 0;
  }
  Check(sg_dataset_load(c.dataset.c_str(), c.split.c_str(), 1, data.out()));
  PrintCounts(data.get(), c.dataset + " [" + c.split + "]");
  if (!c.out.empty()) {
    Check(sg_dataset_save(data.get(), c.out.c_str(), c.split.c_str()));
    std::printf("normalized copy written to %s\n", c.out.c_str());
  }
  return 0;
}

int Weaksup(const Common& c, const std::string& corpus,
            const std::string& in_domain, double tau) {
  if (c.out.empty()) throw CallFailed{SG_ERR_INVALID_ARGUMENT, "--out is required"};
  Model model;
  LoadModel(c, model);
  sg_weaksup_summary s{};
  Check(sg_weaksup_build(model.get(), corpus.c_str(),
                         in_domain.empty() ? nullptr : in_domain.c_str(), tau,
                         c.seed >= 0 ? c.seed : 1, c.out.c_str(), &s));
  std::printf(
      "kept %d, dropped %d, zero-norm %d, in-domain %d -> train %zu, val %zu, "
      "test %zu\n",
      s.kept, s.dropped, s.zero_norm_skipped, s.in_domain, s.train, s.val,
      s.test);
  return 0;
}

int Train(const Common& c, const std::string& dev_split, bool synthetic_config) {
  if (c.out.empty()) throw CallFailed{SG_ERR_INVALID_ARGUMENT, "--out is required"};
  DatasetH train;
  Check(sg_dataset_load(c.dataset.c_str(), c.split.c_str(), 1, train.out()));
  PrintCounts(train.get(), "train");
  DatasetH dev;
  if (!dev_split.empty()) {
    Check(sg_dataset_load(c.dataset.c_str(), dev_split.c_str(), 1, dev.out()));
    PrintCounts(dev.get(), "dev");
  }
  Config config;
  if (synthetic_config) {
    Check(sg_config_synthetic(train.get(), c.seed >= 0 ? c.seed : 1, config.out()));
  } else if (!c.config.empty()) {
    Check(sg_config_load(c.config.c_str(), config.out()));
  } else {
    Check(sg_config_default(config.out()));
  }
  ApplyOverrides(c, config.get());
  Model model;
  Check(sg_model_create(config.get(), model.out()));
  Check(sg_train(model.get(), train.get(), dev.get(), c.out.c_str(), OnStep, nullptr));
  std::printf("checkpoints in %s\n", c.out.c_str());
  return 0;
}

void RunEvaluation(const Common& c, EvaluationH& ev, DatasetH& data) {
  if (c.checkpoint.empty()) {
    throw CallFailed{SG_ERR_INVALID_ARGUMENT, "--checkpoint is required"};
  }
  Model model;
  LoadModel(c, model);
  Check(sg_dataset_load(c.dataset.c_str(), c.split.c_str(), 1, data.out()));
  Check(sg_evaluate(model.get(), data.get(), ev.out()));
}

int Eval(const Common& c) {
  EvaluationH ev;
  DatasetH data;
  RunEvaluation(c, ev, data);
  char* table = nullptr;
  Check(sg_evaluation_table(ev.get(), &table));
  std::printf("%s", Take(table).c_str());
  if (!c.out.empty()) {
    char* record = nullptr;
    char* preds = nullptr;
    Check(sg_evaluation_record(ev.get(), &record));
    Check(sg_evaluation_predictions(ev.get(), &preds));
    WriteText(fs::path(c.out) / "report.txt", Take(record));
    WriteText(fs::path(c.out) / "predictions.jsonl", Take(preds));
  }
  return 0;
}

int Predict(const Common& c) {
  EvaluationH ev;
  DatasetH data;
  RunEvaluation(c, ev, data);
  char* preds = nullptr;
  Check(sg_evaluation_predictions(ev.get(), &preds));
  const std::string jsonl = Take(preds);
  if (c.out.empty()) {
    std::printf("%s", jsonl.c_str());
  } else {
    WriteText(c.out, jsonl);
  }
  return 0;
}

int Render(const Common& c, const std::string& predictions) {
  if (c.out.empty()) throw CallFailed{SG_ERR_INVALID_ARGUMENT, "--out is required"};
  DatasetH data;
  Check(sg_dataset_load(c.dataset.c_str(), c.split.c_str(), 1, data.out()));
  size_t written = 0;
  Check(sg_render(data.get(), ReadText(predictions).c_str(), c.out.c_str(), &written));
  std::printf("rendered %zu images into %s\n", written, c.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint multimodal entity extraction and grounding"};
  app.require_subcommand(1);
  Common c;
  const std::vector<std::string> splits = {"train", "dev", "test"};

  auto add_common = [&](CLI::App* sub, bool model_flags) {
    sub->add_option("--dataset", c.dataset, "Dataset directory");
    sub->add_option("--split", c.split, "Split to read")
        ->check(CLI::IsMember(splits));
    sub->add_option("--seed", c.seed, "Random seed");
    sub->add_option("--out", c.out, "Output path");
    if (model_flags) {
      sub->add_option("--config", c.config, "Run configuration file");
      sub->add_option("--checkpoint", c.checkpoint, "Checkpoint file");
      sub->add_option("--encoder", c.encoder, "Encoder backend")
          ->check(CLI::IsMember({"reference", "pretrained"}));
      sub->add_option("--query-strategy", c.query_strategy,
                      "keyword, template, wikipedia or keyword_annotation");
      sub->add_option("--set", c.sets, "Config override key=value");
    }
  };

  int synthetic = 0;
  CLI::App* prepare = app.add_subcommand("prepare", "Validate or generate a dataset");
  add_common(prepare, false);
  prepare->add_option("--synthetic", synthetic,
                      "Write a procedural dataset with this many examples to --out");

  std::string corpus, in_domain;
  double tau = 0.7;
  CLI::App* weaksup = app.add_subcommand("weaksup", "Build the weakly supervised grounding corpus");
  add_common(weaksup, true);
  weaksup->add_option("--corpus", corpus, "External phrase corpus (TSV)")->required();
  weaksup->add_option("--in-domain", in_domain, "In-domain phrase corpus (TSV)");
  weaksup->add_option("--tau", tau, "Similarity threshold")->check(CLI::Range(0.0, 1.0));

  std::string dev_split;
  bool synthetic_config = false;
  CLI::App* train = app.add_subcommand("train", "Train a model");
  add_common(train, true);
  train->add_option("--dev-split", dev_split, "Split used for model selection")
      ->check(CLI::IsMember(splits));
  train->add_flag("--synthetic-config", synthetic_config,
                  "Use the small-model settings for procedural data");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_common(eval, true);
  CLI::App* predict = app.add_subcommand("predict", "Write predictions as JSON lines");
  add_common(predict, true);

  std::string predictions;
  CLI::App* render = app.add_subcommand("render", "Draw gold and predicted boxes");
  add_common(render, false);
  render->add_option("--predictions", predictions, "Predictions file")->required();

  for (CLI::App* sub : {train, eval, predict, render}) {
    sub->get_option("--dataset")->required();
  }

  CLI11_PARSE(app, argc, argv);
  try {
    if (prepare->parsed()) {
      if (synthetic <= 0 && c.dataset.empty()) {
        throw CallFailed{SG_ERR_INVALID_ARGUMENT, "--dataset or --synthetic is required"};
      }
      return Prepare(c, synthetic);
    }
    if (weaksup->parsed()) return Weaksup(c, corpus, in_domain, tau);
    if (train->parsed()) return Train(c, dev_split, synthetic_config);
    if (eval->parsed()) return Eval(c);
    if (predict->parsed()) return Predict(c);
    if (render->parsed()) return Render(c, predictions);
  } catch (const CallFailed& e) {
    std::fprintf(stderr, "error (%s): %s\n", sg_status_name(e.status),
                 e.message.c_str());
    return static_cast<int>(e.status);
  }
  return 0;
}
