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

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "core/error.h"
#include "harness/checkpoint.h"
#include "harness/dataset.h"
#include "harness/joint_model.h"
#include "harness/run_config.h"
#include "harness/synthetic.h"
#include "harness/trainer.h"
#include "spanground/spanground.h"
#include "weaksup/weaksup.h"

struct sg_config {
  spanground::RunConfig value;
};

struct sg_dataset {
  spanground::Dataset value;
};

struct sg_model {
  std::unique_ptr<spanground::JointModel> value;
};

struct sg_evaluation {
  spanground::Evaluation value;
};

namespace {

using spanground::Error;
using spanground::ErrorCode;

thread_local std::string last_error;

sg_status Fail(sg_status status, const std::string& message) {
  last_error = message;
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
sg_status Guard(F&& body) {
  try {
    body();
    last_error.clear();
    return SG_OK;
  } catch (const Error& e) {
    return Fail(static_cast<sg_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return Fail(SG_ERR_INTERNAL, "out of memory");
  } catch (const std::invalid_argument& e) {
    return Fail(SG_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return Fail(SG_ERR_INTERNAL, e.what());
  }
}

void Require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
}

char* Copy(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* sg_version(void) { return "0.1.0"; }

const char* sg_status_name(sg_status status) {
  switch (status) {
    case SG_OK: return "ok";
    case SG_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SG_ERR_NOT_FOUND: return "not found";
    case SG_ERR_DATA: return "data error";
    case SG_ERR_IO: return "i/o error";
    case SG_ERR_NUMERICAL: return "numerical error";
    case SG_ERR_MISMATCH: return "mismatch";
    case SG_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* sg_last_error(void) { return last_error.c_str(); }

void sg_string_free(char* s) { std::free(s); }

sg_status sg_config_default(sg_config** out) {
  return Guard([&] {
    Require(out != nullptr, "out is null");
    *out = new sg_config{};
  });
}

sg_status sg_config_load(const char* path, sg_config** out) {
  return Guard([&] {
    Require(path != nullptr && out != nullptr, "path or out is null");
    *out = new sg_config{spanground::RunConfig::Load(path)};
  });
}

sg_status sg_config_parse(const char* text, sg_config** out) {
  return Guard([&] {
    Require(text != nullptr && out != nullptr, "text or out is null");
    *out = new sg_config{spanground::RunConfig::Parse(text, "<string>")};
  });
}

sg_status sg_config_synthetic(const sg_dataset* train, uint64_t seed,
                              sg_config** out) {
  return Guard([&] {
    Require(train != nullptr && out != nullptr, "train or out is null");
    *out = new sg_config{spanground::SyntheticRunConfig(train->value, seed)};
  });
}

sg_status sg_config_set(sg_config* config, const char* key, const char* value) {
  return Guard([&] {
    Require(config != nullptr && key != nullptr && value != nullptr,
            "config, key or value is null");
    spanground::RunConfig updated = config->value;
    updated.Set(key, value);
    updated.Validate();
    config->value = std::move(updated);
  });
}

sg_status sg_config_format(const sg_config* config, char** out) {
  return Guard([&] {
    Require(config != nullptr && out != nullptr, "config or out is null");
    *out = Copy(config->value.Format());
  });
}

void sg_config_free(sg_config* config) { delete config; }

sg_status sg_dataset_load(const char* dir, const char* split, int load_images,
                          sg_dataset** out) {
  return Guard([&] {
    Require(dir != nullptr && split != nullptr && out != nullptr,
            "dir, split or out is null");
    *out = new sg_dataset{spanground::LoadDataset(
        dir, spanground::ParseSplit(split), load_images != 0)};
  });
}

sg_status sg_dataset_synthetic(int examples, uint64_t seed, sg_dataset** out) {
  return Guard([&] {
    Require(out != nullptr, "out is null");
    spanground::SyntheticOptions options;
    options.examples = examples;
    options.seed = seed;
    *out = new sg_dataset{spanground::MakeSyntheticDataset(options)};
  });
}

sg_status sg_dataset_save(const sg_dataset* data, const char* dir,
                          const char* split) {
  return Guard([&] {
    Require(data != nullptr && dir != nullptr && split != nullptr,
            "data, dir or split is null");
    spanground::SaveDataset(dir, spanground::ParseSplit(split),
                            data->value.examples);
  });
}

size_t sg_dataset_size(const sg_dataset* data) {
  return data == nullptr ? 0 : data->value.examples.size();
}

sg_status sg_dataset_entity_count(const sg_dataset* data, const char* type,
                                  long* out) {
  return Guard([&] {
    Require(data != nullptr && type != nullptr && out != nullptr,
            "data, type or out is null");
    const auto it = data->value.entity_counts.find(spanground::ParseEntityType(type));
    *out = it == data->value.entity_counts.end() ? 0 : it->second;
  });
}

void sg_dataset_free(sg_dataset* data) { delete data; }

sg_status sg_model_create(const sg_config* config, sg_model** out) {
  return Guard([&] {
    Require(config != nullptr && out != nullptr, "config or out is null");
    *out = new sg_model{std::make_unique<spanground::JointModel>(config->value)};
  });
}

sg_status sg_model_load(const char* checkpoint, const char* encoder,
                        sg_model** out) {
  return Guard([&] {
    Require(checkpoint != nullptr && out != nullptr, "checkpoint or out is null");
    std::optional<std::string> requested;
    if (encoder != nullptr) requested = encoder;
    *out = new sg_model{spanground::RestoreModel(
        spanground::ReadCheckpoint(checkpoint), requested)};
  });
}

sg_status sg_model_save(const sg_model* model, const char* path) {
  return Guard([&] {
    Require(model != nullptr && path != nullptr, "model or path is null");
    spanground::WriteCheckpoint(
        path, spanground::CaptureCheckpoint(*model->value, nullptr));
  });
}

sg_status sg_model_config(const sg_model* model, char** out) {
  return Guard([&] {
    Require(model != nullptr && out != nullptr, "model or out is null");
    *out = Copy(model->value->config().Format());
  });
}

void sg_model_free(sg_model* model) { delete model; }

sg_status sg_train(sg_model* model, const sg_dataset* train,
                   const sg_dataset* dev, const char* out_dir,
                   sg_step_callback callback, void* user) {
  return Guard([&] {
    Require(model != nullptr && train != nullptr, "model or train is null");
    spanground::Trainer trainer(*model->value);
    spanground::TrainOptions options;
    if (out_dir != nullptr) options.out_dir = out_dir;
    if (callback != nullptr) {
      options.on_step = [&](const spanground::StepRecord& r) {
        const sg_step_record c{r.step, r.epoch, r.lr,    r.qg,
                               r.ed,   r.esp,   r.omega, r.total};
        callback(&c, user);
      };
    }
    trainer.Train(train->value, dev != nullptr ? &dev->value : nullptr, options);
  });
}

sg_status sg_evaluate(sg_model* model, const sg_dataset* data,
                      sg_evaluation** out) {
  return Guard([&] {
    Require(model != nullptr && data != nullptr && out != nullptr,
            "model, data or out is null");
    *out = new sg_evaluation{spanground::Evaluate(
        *model->value, data->value, model->value->config().batch_size)};
  });
}

sg_status sg_evaluation_summary(const sg_evaluation* ev, sg_eval_summary* out) {
  return Guard([&] {
    Require(ev != nullptr && out != nullptr, "evaluation or out is null");
    const spanground::EvalReport& r = ev->value.report;
    *out = sg_eval_summary{r.precision,        r.recall,
                           r.f1,               r.accu_050,
                           r.accu_075,         r.miou,
                           r.grounding_count,  r.present_accu_050,
                           r.present_miou,     r.present_grounding_count};
  });
}

sg_status sg_evaluation_table(const sg_evaluation* ev, char** out) {
  return Guard([&] {
    Require(ev != nullptr && out != nullptr, "evaluation or out is null");
    *out = Copy(ev->value.report.ToTable());
  });
}

sg_status sg_evaluation_record(const sg_evaluation* ev, char** out) {
  return Guard([&] {
    Require(ev != nullptr && out != nullptr, "evaluation or out is null");
    *out = Copy(ev->value.report.ToRecord());
  });
}

sg_status sg_evaluation_predictions(const sg_evaluation* ev, char** out) {
  return Guard([&] {
    Require(ev != nullptr && out != nullptr, "evaluation or out is null");
    *out = Copy(spanground::FormatPredictions(ev->value.predictions));
  });
}

void sg_evaluation_free(sg_evaluation* ev) { delete ev; }

sg_status sg_render(const sg_dataset* data, const char* predictions_jsonl,
                    const char* out_dir, size_t* written) {
  return Guard([&] {
    Require(data != nullptr && predictions_jsonl != nullptr && out_dir != nullptr,
            "data, predictions or out_dir is null");
    const auto predictions = spanground::ParsePredictions(predictions_jsonl);
    const auto paths =
        spanground::RenderPredictions(data->value, predictions, out_dir);
    if (written != nullptr) *written = paths.size();
  });
}

sg_status sg_weaksup_build(sg_model* model, const char* external_tsv,
                           const char* in_domain_tsv, double tau, uint64_t seed,
                           const char* out_dir, sg_weaksup_summary* summary) {
  return Guard([&] {
    Require(model != nullptr && external_tsv != nullptr && out_dir != nullptr,
            "model, external corpus or out_dir is null");
    using spanground::SampleOrigin;
    const auto external = spanground::LoadPhraseCorpus(
        external_tsv, SampleOrigin::kExternalUnmodified);
    std::vector<spanground::PhraseSample> in_domain;
    if (in_domain_tsv != nullptr) {
      in_domain =
          spanground::LoadPhraseCorpus(in_domain_tsv, SampleOrigin::kInDomain);
    }
    spanground::JointModel& m = *model->value;
    std::vector<spanground::QuerySpec> queries;
    for (spanground::EntityType t : spanground::kAllEntityTypes) {
      queries.push_back(m.query_bank().MakeQuery(t, m.config().query_strategy));
    }
    spanground::BackboneEmbedder embedder(m.text_encoder().backbone());
    const spanground::WeakCorpus corpus = spanground::BuildWeakCorpus(
        external, in_domain, queries, embedder, tau, {}, seed);
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    spanground::SavePhraseCorpus((dir / "train.tsv").string(), corpus.splits.train);
    spanground::SavePhraseCorpus((dir / "val.tsv").string(), corpus.splits.val);
    spanground::SavePhraseCorpus((dir / "test.tsv").string(), corpus.splits.test);
    if (summary != nullptr) {
      *summary = sg_weaksup_summary{corpus.kept,
                                    corpus.dropped,
                                    corpus.zero_norm_skipped,
                                    corpus.in_domain,
                                    corpus.splits.train.size(),
                                    corpus.splits.val.size(),
                                    corpus.splits.test.size()};
    }
  });
}

}  // extern "C"
