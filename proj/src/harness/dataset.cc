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

#include "harness/dataset.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "core/error.h"

namespace spanground {

namespace fs = std::filesystem;

namespace {

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteFile(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  out << contents;
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

std::vector<std::string> Fields(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string f;
  while (in >> f) out.push_back(f);
  return out;
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct PendingSentence {
  std::string id;
  std::string image;
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  int first_line = 0;
};

ExamplePair FinishSentence(PendingSentence& s, const std::string& origin,
                           Split split, size_t index) {
  const std::string where = origin + ":" + std::to_string(s.first_line);
  if (s.image.empty()) {
    throw Error(ErrorCode::kDataError, where + ": sentence has no '# img:' line");
  }
  ExamplePair ex;
  if (s.id.empty()) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "-%06zu", index);
    ex.id = std::string(SplitName(split)) + buf;
  } else {
    ex.id = s.id;
  }
  ex.image_ref = s.image;
  ex.tokens = s.tokens;
  ex.split = split;
  // Tags were validated line by line; collect spans.
  int open_start = -1;
  EntityType open_type = EntityType::kPer;
  for (size_t i = 0; i <= s.tags.size(); ++i) {
    const std::string tag = i < s.tags.size() ? s.tags[i] : "O";
    const bool continues = tag.size() > 2 && tag[0] == 'I';
    if (open_start >= 0 && !continues) {
      ex.gold_entities.push_back(
          {open_start, static_cast<int>(i) - 1, open_type});
      open_start = -1;
    }
    if (tag.size() > 2 && tag[0] == 'B') {
      open_start = static_cast<int>(i);
      open_type = ParseEntityType(std::string_view(tag).substr(2));
    }
  }
  s = PendingSentence();
  return ex;
}

}  // namespace

std::vector<ExamplePair> ParseSentences(std::string_view contents,
                                        const std::string& origin,
                                        Split split) {
  std::vector<ExamplePair> out;
  PendingSentence pending;
  std::string previous_tag = "O";
  int line_no = 0;
  auto flush = [&] {
    if (!pending.tokens.empty()) {
      out.push_back(FinishSentence(pending, origin, split, out.size() + 1));
    } else if (!pending.image.empty() || !pending.id.empty()) {
      throw Error(ErrorCode::kDataError,
                  origin + ":" + std::to_string(pending.first_line) +
                      ": sentence has no tokens");
    }
    previous_tag = "O";
  };
  std::istringstream in{std::string(contents)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    const std::vector<std::string> f = Fields(line);
    if (f.empty()) {
      flush();
      continue;
    }
    if (f[0] == "#") {
      if (f.size() == 3 && (f[1] == "img:" || f[1] == "id:")) {
        if (!pending.tokens.empty()) flush();
        if (pending.first_line == 0) pending.first_line = line_no;
        (f[1] == "img:" ? pending.image : pending.id) = f[2];
        continue;
      }
      throw Error(ErrorCode::kDataError,
                  where + ": expected '# img: <file>' or '# id: <id>'");
    }
    if (f.size() == 1 && f[0].rfind("IMGID:", 0) == 0) {
      // Header line of the public tweet corpora.
      if (!pending.tokens.empty()) flush();
      if (pending.first_line == 0) pending.first_line = line_no;
      pending.image = f[0].substr(6) + ".jpg";
      continue;
    }
    if (f.size() != 2) {
      throw Error(ErrorCode::kDataError,
                  where + ": expected '<token> <tag>', got " +
                      std::to_string(f.size()) + " fields");
    }
    const std::string& tag = f[1];
    if (tag != "O") {
      if (tag.size() < 3 || (tag[0] != 'B' && tag[0] != 'I') || tag[1] != '-') {
        throw Error(ErrorCode::kDataError, where + ": malformed tag '" + tag + "'");
      }
      try {
        ParseEntityType(std::string_view(tag).substr(2));
      } catch (const Error& e) {
        throw Error(ErrorCode::kDataError, where + ": " + e.what());
      }
      if (tag[0] == 'I' && (previous_tag == "O" ||
                            previous_tag.substr(2) != tag.substr(2))) {
        throw Error(ErrorCode::kDataError,
                    where + ": " + tag + " without a preceding B-" +
                        tag.substr(2));
      }
    }
    if (pending.first_line == 0) pending.first_line = line_no;
    pending.tokens.push_back(f[0]);
    pending.tags.push_back(tag);
    previous_tag = tag;
  }
  flush();
  return out;
}

std::string FormatSentences(const std::vector<ExamplePair>& examples) {
  std::string out;
  for (const ExamplePair& ex : examples) {
    out += "# img: " + ex.image_ref + "\n# id: " + ex.id + "\n";
    std::vector<std::string> tags(ex.tokens.size(), "O");
    for (const EntitySpan& s : ex.gold_entities) {
      const std::string name(EntityTypeName(s.type));
      tags[s.start] = "B-" + name;
      for (int i = s.start + 1; i <= s.end; ++i) tags[i] = "I-" + name;
    }
    for (size_t i = 0; i < ex.tokens.size(); ++i) {
      if (ex.tokens[i].find_first_of(" \t\n") != std::string::npos) {
        throw Error(ErrorCode::kInvalidArgument,
                    "example " + ex.id + ": token contains whitespace");
      }
      out += ex.tokens[i] + "\t" + tags[i] + "\n";
    }
    out += "\n";
  }
  return out;
}

BoxTable ParseBoxes(std::string_view contents, const std::string& origin) {
  BoxTable table;
  std::istringstream in{std::string(contents)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::vector<std::string> f = Fields(line);
    if (f.empty() || f[0][0] == '#') continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (f.size() != 8) {
      throw Error(ErrorCode::kDataError,
                  where + ": expected 'image TYPE x1 y1 x2 y2 orig_w orig_h'");
    }
    double v[6];
    for (int k = 0; k < 6; ++k) {
      size_t used = 0;
      try {
        v[k] = std::stod(f[k + 2], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != f[k + 2].size()) {
        throw Error(ErrorCode::kDataError,
                    where + ": malformed number '" + f[k + 2] + "'");
      }
    }
    try {
      const EntityType type = ParseEntityType(f[1]);
      if (!(v[0] < v[2] && v[1] < v[3] && v[0] >= 0 && v[1] >= 0 &&
            v[2] <= v[4] && v[3] <= v[5])) {
        throw Error(ErrorCode::kDataError, "malformed box");
      }
      const BBox box = BBox::FromOriginal(v[0], v[1], v[2], v[3], v[4], v[5]);
      if (!box.valid()) throw Error(ErrorCode::kDataError, "malformed box");
      if (!table.emplace(std::make_pair(f[0], type), box).second) {
        throw Error(ErrorCode::kDataError, "duplicate box for " + f[0] + " " + f[1]);
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::kDataError, where + ": " + e.what());
    }
  }
  return table;
}

std::string FormatBoxes(const BoxTable& boxes) {
  std::string out;
  for (const auto& [key, b] : boxes) {
    out += key.first + " " + std::string(EntityTypeName(key.second)) + " " +
           Num(b.x1) + " " + Num(b.y1) + " " + Num(b.x2) + " " + Num(b.y2) +
           " 256 256\n";
  }
  return out;
}

ImageTensor LoadImage(const std::string& path, int size) {
  cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
  if (bgr.empty()) throw Error(ErrorCode::kIoError, "cannot read image " + path);
  if (bgr.cols != size || bgr.rows != size) {
    cv::Mat resized;
    cv::resize(bgr, resized, cv::Size(size, size), 0, 0, cv::INTER_LINEAR);
    bgr = resized;
  }
  ImageTensor image;
  image.height = size;
  image.width = size;
  image.pixels.resize(static_cast<Eigen::Index>(size) * size, 3);
  for (int y = 0; y < size; ++y) {
    const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < size; ++x) {
      for (int c = 0; c < 3; ++c) {
        image.pixels(y * size + x, c) = row[x][2 - c] / 255.0;
      }
    }
  }
  return image;
}

void SaveImage(const std::string& path, const ImageTensor& image) {
  cv::Mat bgr(image.height, image.width, CV_8UC3);
  for (int y = 0; y < image.height; ++y) {
    cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = image.pixels(y * image.width + x, c);
        row[x][2 - c] = static_cast<unsigned char>(
            std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
    }
  }
  if (!cv::imwrite(path, bgr)) {
    throw Error(ErrorCode::kIoError, "cannot write image " + path);
  }
}

std::map<EntityType, long> CountEntities(const std::vector<ExamplePair>& v) {
  std::map<EntityType, long> counts;
  for (EntityType t : kAllEntityTypes) counts[t] = 0;
  for (const ExamplePair& ex : v) {
    for (const EntitySpan& s : ex.gold_entities) ++counts[s.type];
  }
  return counts;
}

Dataset LoadDataset(const std::string& dir, Split split, bool load_images) {
  const fs::path root(dir);
  const fs::path sentences = root / (std::string(SplitName(split)) + ".txt");
  if (!fs::exists(sentences)) {
    throw Error(ErrorCode::kNotFound,
                "no sentences file " + sentences.string());
  }
  std::vector<ExamplePair> pairs =
      ParseSentences(ReadFile(sentences), sentences.string(), split);
  const fs::path boxes_path = root / "boxes.txt";
  BoxTable boxes;
  if (fs::exists(boxes_path)) {
    boxes = ParseBoxes(ReadFile(boxes_path), boxes_path.string());
  }

  Dataset data;
  for (ExamplePair& ex : pairs) {
    for (EntityType t : kAllEntityTypes) {
      auto it = boxes.find({ex.image_ref, t});
      if (it != boxes.end()) ex.gold_boxes[t] = it->second;
    }
    ex.Validate();
    LoadedExample loaded;
    if (load_images) {
      const fs::path image_path = root / "images" / ex.image_ref;
      if (!fs::exists(image_path)) {
        throw Error(ErrorCode::kNotFound, "example " + ex.id +
                                              ": missing image " +
                                              image_path.string());
      }
      loaded.image = LoadImage(image_path.string());
    }
    loaded.pair = std::move(ex);
    data.examples.push_back(std::move(loaded));
  }
  std::vector<ExamplePair> plain;
  for (const LoadedExample& e : data.examples) plain.push_back(e.pair);
  data.entity_counts = CountEntities(plain);
  return data;
}

void SaveDataset(const std::string& dir, Split split,
                 const std::vector<LoadedExample>& examples) {
  const fs::path root(dir);
  fs::create_directories(root / "images");
  std::vector<ExamplePair> pairs;
  const fs::path boxes_path = root / "boxes.txt";
  BoxTable boxes;
  if (fs::exists(boxes_path)) {
    boxes = ParseBoxes(ReadFile(boxes_path), boxes_path.string());
  }
  for (const LoadedExample& e : examples) {
    pairs.push_back(e.pair);
    for (const auto& [type, box] : e.pair.gold_boxes) {
      boxes[{e.pair.image_ref, type}] = box;
    }
    SaveImage((root / "images" / e.pair.image_ref).string(), e.image);
  }
  WriteFile(root / (std::string(SplitName(split)) + ".txt"),
            FormatSentences(pairs));
  WriteFile(boxes_path, FormatBoxes(boxes));
}

}  // namespace spanground
