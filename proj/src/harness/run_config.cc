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

#include "harness/run_config.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "core/error.h"

namespace spanground {

namespace {

std::string Trim(std::string_view s) {
  const size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double ToDouble(const std::string& key, const std::string& value) {
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                key + ": expected a number, got '" + value + "'");
  }
  return v;
}

long long ToInt(const std::string& key, const std::string& value) {
  const double v = ToDouble(key, value);
  if (v != std::floor(v)) {
    throw Error(ErrorCode::kInvalidArgument,
                key + ": expected an integer, got '" + value + "'");
  }
  return static_cast<long long>(v);
}

bool ToBool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error(ErrorCode::kInvalidArgument,
              key + ": expected true or false, got '" + value + "'");
}

std::vector<double> ToList(const std::string& key, const std::string& value,
                           size_t count) {
  std::vector<double> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(ToDouble(key, Trim(item)));
  if (out.size() != count) {
    throw Error(ErrorCode::kInvalidArgument,
                key + ": expected " + std::to_string(count) +
                    " comma-separated values");
  }
  return out;
}

constexpr std::pair<ExistenceContext, const char*> kContextNames[] = {
    {ExistenceContext::kStartAndEnd, "start_end"},
    {ExistenceContext::kFused, "fused"},
    {ExistenceContext::kStartOnly, "start"},
};

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

#define SG_DOUBLE(path)                                              \
  Field {                                                            \
    [](const RunConfig& c) { return Num(c.path); },                  \
        [](RunConfig& c, const std::string& k, const std::string& v) { \
          c.path = ToDouble(k, v);                                   \
        }                                                            \
  }
#define SG_INT(path)                                                 \
  Field {                                                            \
    [](const RunConfig& c) { return std::to_string(c.path); },       \
        [](RunConfig& c, const std::string& k, const std::string& v) { \
          c.path = static_cast<decltype(c.path)>(ToInt(k, v));       \
        }                                                            \
  }
#define SG_BOOL(path)                                                \
  Field {                                                            \
    [](const RunConfig& c) {                                         \
      return std::string(c.path ? "true" : "false");                 \
    },                                                               \
        [](RunConfig& c, const std::string& k, const std::string& v) { \
          c.path = ToBool(k, v);                                     \
        }                                                            \
  }

const std::map<std::string, Field>& Fields() {
  static const std::map<std::string, Field> fields = {
      {"learning_rate", SG_DOUBLE(learning_rate)},
      {"weight_decay", SG_DOUBLE(weight_decay)},
      {"warmup_fraction", SG_DOUBLE(warmup_fraction)},
      {"batch_size", SG_INT(batch_size)},
      {"epochs", SG_INT(epochs)},
      {"max_steps", SG_INT(max_steps)},
      {"patience", SG_INT(patience)},
      {"checkpoint_every", SG_INT(checkpoint_every)},
      {"seed", SG_INT(seed)},
      {"lambda1", SG_DOUBLE(loss.lambda1)},
      {"lambda2", SG_DOUBLE(loss.lambda2)},
      {"boundary_threshold", SG_DOUBLE(decode.boundary_threshold)},
      {"match_threshold", SG_DOUBLE(decode.match_threshold)},
      {"max_span_length", SG_INT(decode.max_span_length)},
      {"require_boxes", SG_BOOL(require_boxes)},
      {"grid_lr_min", SG_DOUBLE(grid_lr_min)},
      {"grid_lr_max", SG_DOUBLE(grid_lr_max)},
      {"grid_dropout_min", SG_DOUBLE(grid_dropout_min)},
      {"grid_dropout_max", SG_DOUBLE(grid_dropout_max)},
      {"dropout", SG_DOUBLE(model.dropout)},
      {"hidden", SG_INT(model.hidden)},
      {"heads", SG_INT(model.heads)},
      {"text_hidden", SG_INT(model.text_hidden)},
      {"text_layers", SG_INT(model.text_layers)},
      {"text_heads", SG_INT(model.text_heads)},
      {"text_vocab_buckets", SG_INT(model.text_vocab_buckets)},
      {"max_text_length", SG_INT(model.max_text_length)},
      {"freeze_text", SG_BOOL(model.freeze_text)},
      {"share_scale_attention", SG_BOOL(model.share_scale_attention)},
      {"encoder",
       {[](const RunConfig& c) { return c.model.encoder; },
        [](RunConfig& c, const std::string&, const std::string& v) {
          c.model.encoder = v;
        }}},
      {"query_strategy",
       {[](const RunConfig& c) {
          return std::string(QueryStrategyName(c.query_strategy));
        },
        [](RunConfig& c, const std::string&, const std::string& v) {
          c.query_strategy = ParseQueryStrategy(v);
        }}},
      {"omega_override",
       {[](const RunConfig& c) {
          return c.omega_override ? Num(*c.omega_override) : std::string("none");
        },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          if (v == "none") {
            c.omega_override.reset();
          } else {
            c.omega_override = ToDouble(k, v);
          }
        }}},
      {"existence_context",
       {[](const RunConfig& c) {
          for (const auto& [ctx, name] : kContextNames) {
            if (ctx == c.model.existence_context) return std::string(name);
          }
          return std::string("start_end");
        },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          for (const auto& [ctx, name] : kContextNames) {
            if (v == name) {
              c.model.existence_context = ctx;
              return;
            }
          }
          throw Error(ErrorCode::kInvalidArgument,
                      k + ": expected start_end, fused or start");
        }}},
      {"visual_channels",
       {[](const RunConfig& c) {
          const auto& v = c.model.visual_channels;
          return std::to_string(v[0]) + "," + std::to_string(v[1]) + "," +
                 std::to_string(v[2]);
        },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          const std::vector<double> list = ToList(k, v, 3);
          for (int i = 0; i < 3; ++i) {
            c.model.visual_channels[i] = static_cast<int>(list[i]);
          }
        }}},
      {"anchors",
       {[](const RunConfig& c) {
          std::string out;
          for (const AnchorPrior& a : c.model.anchors) {
            if (!out.empty()) out += ",";
            out += Num(a.width) + "," + Num(a.height);
          }
          return out;
        },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          const std::vector<double> list = ToList(k, v, 18);
          for (int i = 0; i < 9; ++i) {
            c.model.anchors[i] = {list[2 * i], list[2 * i + 1]};
          }
        }}},
  };
  return fields;
}

#undef SG_DOUBLE
#undef SG_INT
#undef SG_BOOL

void Require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, key + " " + what);
}

}  // namespace

void RunConfig::Validate() const {
  Require(learning_rate > 0, "learning_rate", "must be positive");
  Require(weight_decay >= 0, "weight_decay", "must be non-negative");
  Require(warmup_fraction >= 0 && warmup_fraction < 1, "warmup_fraction",
          "must lie in [0, 1)");
  Require(model.dropout >= 0 && model.dropout < 1, "dropout",
          "must lie in [0, 1)");
  Require(batch_size > 0, "batch_size", "must be positive");
  Require(epochs > 0, "epochs", "must be positive");
  Require(max_steps >= 0, "max_steps", "must be non-negative");
  Require(patience > 0, "patience", "must be positive");
  Require(checkpoint_every > 0, "checkpoint_every", "must be positive");
  Require(loss.lambda1 > 0, "lambda1", "must be positive");
  Require(loss.lambda2 > 0, "lambda2", "must be positive");
  Require(!omega_override || *omega_override > 0, "omega_override",
          "must be positive");
  Require(decode.boundary_threshold > 0 && decode.boundary_threshold < 1,
          "boundary_threshold", "must lie in (0, 1)");
  Require(decode.match_threshold > 0 && decode.match_threshold < 1,
          "match_threshold", "must lie in (0, 1)");
  Require(decode.max_span_length > 0, "max_span_length", "must be positive");
  Require(0 < grid_lr_min && grid_lr_min <= grid_lr_max, "grid_lr_min",
          "must be positive and at most grid_lr_max");
  Require(0 <= grid_dropout_min && grid_dropout_min <= grid_dropout_max &&
              grid_dropout_max < 1,
          "grid_dropout_min", "must satisfy 0 <= min <= max < 1");
  Require(model.hidden > 0 && model.heads > 0 && model.hidden % model.heads == 0,
          "hidden", "must be a positive multiple of heads");
  Require(model.text_hidden > 0 && model.text_heads > 0 &&
              model.text_hidden % model.text_heads == 0,
          "text_hidden", "must be a positive multiple of text_heads");
  Require(model.text_vocab_buckets > 3, "text_vocab_buckets",
          "must exceed the three special ids");
  for (int c : model.visual_channels) {
    Require(c > 0, "visual_channels", "must be positive");
  }
  for (const AnchorPrior& a : model.anchors) {
    Require(a.width > 0 && a.height > 0, "anchors", "must be positive");
  }
}

std::string RunConfig::Format() const {
  std::string out;
  for (const auto& [key, field] : Fields()) {
    out += key + " = " + field.get(*this) + "\n";
  }
  return out;
}

void RunConfig::Set(const std::string& key, const std::string& value) {
  auto it = Fields().find(key);
  if (it == Fields().end()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
  }
  it->second.set(*this, key, value);
}

RunConfig RunConfig::Parse(std::string_view text, const std::string& origin) {
  RunConfig config;
  std::stringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string trimmed = Trim(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    const size_t eq = trimmed.find('=');
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, where + "expected key = value");
    }
    try {
      config.Set(Trim(trimmed.substr(0, eq)), Trim(trimmed.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what());
    }
  }
  config.Validate();
  return config;
}

RunConfig RunConfig::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return Parse(buffer.str(), path);
}

std::vector<GridPoint> GridSearchPoints(const RunConfig& config, int lr_points,
                                        int dropout_points) {
  if (lr_points < 1 || dropout_points < 1) {
    throw Error(ErrorCode::kInvalidArgument, "grid needs at least one point");
  }
  std::vector<GridPoint> out;
  const double log_lo = std::log(config.grid_lr_min);
  const double log_hi = std::log(config.grid_lr_max);
  for (int i = 0; i < lr_points; ++i) {
    const double t = lr_points == 1 ? 0.0 : double(i) / (lr_points - 1);
    double lr = std::exp(log_lo + t * (log_hi - log_lo));
    if (i == 0) lr = config.grid_lr_min;
    if (i == lr_points - 1 && lr_points > 1) lr = config.grid_lr_max;
    for (int j = 0; j < dropout_points; ++j) {
      const double s = dropout_points == 1 ? 0.0 : double(j) / (dropout_points - 1);
      double p = config.grid_dropout_min +
                 s * (config.grid_dropout_max - config.grid_dropout_min);
      if (j == dropout_points - 1 && dropout_points > 1) {
        p = config.grid_dropout_max;
      }
      out.push_back({lr, p});
    }
  }
  return out;
}

}  // namespace spanground
