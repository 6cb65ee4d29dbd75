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

#include "harness/checkpoint.h"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "core/error.h"

namespace spanground {

namespace {

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  void Bytes(const void* data, size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  template <typename T>
  void Pod(T v) {
    Bytes(&v, sizeof(T));
  }
  void String(const std::string& s) {
    Pod<std::uint64_t>(s.size());
    Bytes(s.data(), s.size());
  }
  void Mat(const nn::Matrix& m) {
    Pod<std::int64_t>(m.rows());
    Pod<std::int64_t>(m.cols());
    Bytes(m.data(), sizeof(double) * static_cast<size_t>(m.size()));
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, const std::string& path) : in_(in), path_(path) {}
  void Bytes(void* data, size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (!in_) throw Error(ErrorCode::kDataError, path_ + ": truncated checkpoint");
  }
  template <typename T>
  T Pod() {
    T v;
    Bytes(&v, sizeof(T));
    return v;
  }
  std::string String() {
    const auto n = Pod<std::uint64_t>();
    if (n > (1ULL << 32)) Fail("implausible string length");
    std::string s(n, '\0');
    Bytes(s.data(), n);
    return s;
  }
  nn::Matrix Mat() {
    const auto rows = Pod<std::int64_t>();
    const auto cols = Pod<std::int64_t>();
    if (rows < 0 || cols < 0 || rows * cols > (1LL << 31)) {
      Fail("implausible tensor shape");
    }
    nn::Matrix m(rows, cols);
    Bytes(m.data(), sizeof(double) * static_cast<size_t>(m.size()));
    return m;
  }
  [[noreturn]] void Fail(const std::string& what) {
    throw Error(ErrorCode::kDataError, path_ + ": " + what);
  }

 private:
  std::ifstream& in_;
  std::string path_;
};

}  // namespace

Checkpoint CaptureCheckpoint(const JointModel& model,
                             const TrainingState* training) {
  Checkpoint c;
  c.config = model.config();
  c.config_hash = model.config().model.Hash();
  for (const auto& [name, v] : model.params().params()) {
    c.params.emplace_back(name, v.value());
  }
  for (const auto& [name, stats] : model.params().buffers()) {
    c.buffers[name] = *stats;
  }
  if (training) c.training = *training;
  return c;
}

void WriteCheckpoint(const std::string& path, const Checkpoint& c) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp);
    Writer w(out);
    w.Bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
    w.Pod<std::uint32_t>(c.version);
    w.Pod<std::uint64_t>(c.config_hash);
    w.Pod<std::int64_t>(c.training ? c.training->step : 0);
    w.String(c.config.Format());
    w.Pod<std::uint64_t>(c.params.size());
    for (const auto& [name, m] : c.params) {
      w.String(name);
      w.Mat(m);
    }
    w.Pod<std::uint64_t>(c.buffers.size());
    for (const auto& [name, stats] : c.buffers) {
      w.String(name);
      w.Mat(stats.running_mean);
      w.Mat(stats.running_var);
    }
    w.Pod<std::uint8_t>(c.training ? 1 : 0);
    if (c.training) {
      const TrainingState& t = *c.training;
      w.Pod<std::int32_t>(t.epoch);
      w.Pod<std::int64_t>(t.adam_step);
      w.Pod<std::uint64_t>(t.first_moments.size());
      for (size_t i = 0; i < t.first_moments.size(); ++i) {
        w.Mat(t.first_moments[i]);
        w.Mat(t.second_moments[i]);
      }
      w.String(t.rng_state);
      w.Pod<double>(t.omega);
      w.Pod<std::int64_t>(t.omega_fallbacks);
      w.Pod<double>(t.best_dev_f1);
      w.Pod<std::int32_t>(t.epochs_without_improvement);
    }
    if (!out) throw Error(ErrorCode::kIoError, "write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot move checkpoint to " + path);
}

Checkpoint ReadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open checkpoint " + path);
  Reader r(in, path);
  char magic[sizeof(kCheckpointMagic)];
  r.Bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    r.Fail("not a checkpoint file");
  }
  Checkpoint c;
  c.version = r.Pod<std::uint32_t>();
  if (c.version != kCheckpointVersion) {
    r.Fail("unsupported checkpoint version " + std::to_string(c.version));
  }
  c.config_hash = r.Pod<std::uint64_t>();
  const long step = static_cast<long>(r.Pod<std::int64_t>());
  c.config = RunConfig::Parse(r.String(), path + " (embedded config)");
  if (c.config.model.Hash() != c.config_hash) {
    r.Fail("embedded config does not match the header hash");
  }
  const auto n_params = r.Pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < n_params; ++i) {
    std::string name = r.String();
    c.params.emplace_back(std::move(name), r.Mat());
  }
  const auto n_buffers = r.Pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < n_buffers; ++i) {
    std::string name = r.String();
    nn::BatchNormStats stats;
    stats.running_mean = r.Mat();
    stats.running_var = r.Mat();
    c.buffers[name] = std::move(stats);
  }
  if (r.Pod<std::uint8_t>() != 0) {
    TrainingState t;
    t.step = step;
    t.epoch = r.Pod<std::int32_t>();
    t.adam_step = static_cast<long>(r.Pod<std::int64_t>());
    const auto n = r.Pod<std::uint64_t>();
    if (n != n_params) r.Fail("optimizer state does not match the parameters");
    for (std::uint64_t i = 0; i < n; ++i) {
      t.first_moments.push_back(r.Mat());
      t.second_moments.push_back(r.Mat());
    }
    t.rng_state = r.String();
    t.omega = r.Pod<double>();
    t.omega_fallbacks = static_cast<long>(r.Pod<std::int64_t>());
    t.best_dev_f1 = r.Pod<double>();
    t.epochs_without_improvement = r.Pod<std::int32_t>();
    c.training = std::move(t);
  }
  return c;
}

std::unique_ptr<JointModel> RestoreModel(
    const Checkpoint& checkpoint, const std::optional<std::string>& encoder) {
  if (encoder) {
    ModelConfig requested = checkpoint.config.model;
    requested.encoder = *encoder;
    if (requested.Hash() != checkpoint.config_hash) {
      throw Error(ErrorCode::kMismatch,
                  "checkpoint was trained with encoder '" +
                      checkpoint.config.model.encoder + "' but '" + *encoder +
                      "' was requested (config hash mismatch)");
    }
  }
  auto model = std::make_unique<JointModel>(checkpoint.config);
  nn::ParamStore& store = model->params();
  if (store.params().size() != checkpoint.params.size()) {
    throw Error(ErrorCode::kMismatch, "checkpoint parameter count differs");
  }
  for (const auto& [name, value] : checkpoint.params) {
    nn::Var v = store.Get(name);
    if (v.rows() != value.rows() || v.cols() != value.cols()) {
      throw Error(ErrorCode::kMismatch, "checkpoint shape differs for " + name);
    }
    v.mutable_value() = value;
  }
  for (const auto& [name, stats] : checkpoint.buffers) {
    store.GetBuffer(name) = stats;
  }
  return model;
}

}  // namespace spanground
