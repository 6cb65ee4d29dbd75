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

#ifndef SPANGROUND_SPANGROUND_H_
#define SPANGROUND_SPANGROUND_H_

// C interface to the joint span-extraction and grounding model. Every
// object is an opaque handle released with its *_free function; every
// fallible call returns an sg_status and leaves a message retrievable with
// sg_last_error() on the calling thread. Strings returned through char**
// are owned by the caller and released with sg_string_free().

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SG_API __declspec(dllexport)
#else
#define SG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sg_status {
  SG_OK = 0,
  SG_ERR_INVALID_ARGUMENT = 1,
  SG_ERR_NOT_FOUND = 2,
  SG_ERR_DATA = 3,
  SG_ERR_IO = 4,
  SG_ERR_NUMERICAL = 5,
  SG_ERR_MISMATCH = 6,
  SG_ERR_INTERNAL = 7,
} sg_status;

typedef struct sg_config sg_config;
typedef struct sg_dataset sg_dataset;
typedef struct sg_model sg_model;
typedef struct sg_evaluation sg_evaluation;

SG_API const char* sg_version(void);
SG_API const char* sg_status_name(sg_status status);
// Message of the last failed call on this thread; "" after a success.
SG_API const char* sg_last_error(void);
SG_API void sg_string_free(char* s);

// ---- Run configuration ----------------------------------------------------

SG_API sg_status sg_config_default(sg_config** out);
SG_API sg_status sg_config_load(const char* path, sg_config** out);
SG_API sg_status sg_config_parse(const char* text, sg_config** out);
// Small-model settings for the procedural corpus in `train`.
SG_API sg_status sg_config_synthetic(const sg_dataset* train, uint64_t seed,
                                     sg_config** out);
SG_API sg_status sg_config_set(sg_config* config, const char* key,
                               const char* value);
SG_API sg_status sg_config_format(const sg_config* config, char** out);
SG_API void sg_config_free(sg_config* config);

// ---- Datasets -------------------------------------------------------------

// split is "train", "dev" or "test".
SG_API sg_status sg_dataset_load(const char* dir, const char* split,
                                 int load_images, sg_dataset** out);
SG_API sg_status sg_dataset_synthetic(int examples, uint64_t seed,
                                      sg_dataset** out);
SG_API sg_status sg_dataset_save(const sg_dataset* data, const char* dir,
                                 const char* split);
SG_API size_t sg_dataset_size(const sg_dataset* data);
// type is "PER", "LOC", "ORG" or "OTHER".
SG_API sg_status sg_dataset_entity_count(const sg_dataset* data,
                                         const char* type, long* out);
SG_API void sg_dataset_free(sg_dataset* data);

// ---- Models and training --------------------------------------------------

typedef struct sg_step_record {
  long step;
  int epoch;
  double lr;
  double loss_qg;
  double loss_ed;
  double loss_esp;
  double omega;
  double total;
} sg_step_record;

typedef void (*sg_step_callback)(const sg_step_record* record, void* user);

SG_API sg_status sg_model_create(const sg_config* config, sg_model** out);
// encoder may be NULL; otherwise it must match the checkpoint's backend.
SG_API sg_status sg_model_load(const char* checkpoint, const char* encoder,
                               sg_model** out);
SG_API sg_status sg_model_save(const sg_model* model, const char* path);
SG_API sg_status sg_model_config(const sg_model* model, char** out);
SG_API void sg_model_free(sg_model* model);

// dev, out_dir and callback may be NULL. With out_dir the run writes
// config.txt, train_log.txt and checkpoints there.
SG_API sg_status sg_train(sg_model* model, const sg_dataset* train,
                          const sg_dataset* dev, const char* out_dir,
                          sg_step_callback callback, void* user);

// ---- Evaluation and prediction ---------------------------------------------

typedef struct sg_eval_summary {
  double precision;
  double recall;
  double f1;
  double accu_050;
  double accu_075;
  double miou;
  long grounding_count;
  // The grounding scores over types mentioned in the sentence only.
  double present_accu_050;
  double present_miou;
  long present_grounding_count;
} sg_eval_summary;

SG_API sg_status sg_evaluate(sg_model* model, const sg_dataset* data,
                             sg_evaluation** out);
SG_API sg_status sg_evaluation_summary(const sg_evaluation* ev,
                                       sg_eval_summary* out);
SG_API sg_status sg_evaluation_table(const sg_evaluation* ev, char** out);
SG_API sg_status sg_evaluation_record(const sg_evaluation* ev, char** out);
// One JSON object per (example, type) instance.
SG_API sg_status sg_evaluation_predictions(const sg_evaluation* ev, char** out);
SG_API void sg_evaluation_free(sg_evaluation* ev);

// Draws gold and predicted boxes for every example of `data` into
// out_dir/<id>.png. predictions_jsonl is what sg_evaluation_predictions
// produced. written may be NULL.
SG_API sg_status sg_render(const sg_dataset* data,
                           const char* predictions_jsonl, const char* out_dir,
                           size_t* written);

// ---- Weak supervision -------------------------------------------------------

typedef struct sg_weaksup_summary {
  int kept;
  int dropped;
  int zero_norm_skipped;
  int in_domain;
  size_t train;
  size_t val;
  size_t test;
} sg_weaksup_summary;

// Filters the external phrase corpus against the type queries with the
// model's text backbone, adds query-replaced copies and the in-domain
// corpus (may be NULL), shuffles with seed and writes train.tsv, val.tsv
// and test.tsv into out_dir.
SG_API sg_status sg_weaksup_build(sg_model* model, const char* external_tsv,
                                  const char* in_domain_tsv, double tau,
                                  uint64_t seed, const char* out_dir,
                                  sg_weaksup_summary* summary);

#ifdef __cplusplus
}  // extern "C"
#endif

#endif  // SPANGROUND_SPANGROUND_H_
