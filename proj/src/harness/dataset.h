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

#ifndef SPANGROUND_HARNESS_DATASET_H_
#define SPANGROUND_HARNESS_DATASET_H_

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "core/types.h"
#include "encoders/image_encoder.h"

namespace spanground {

// Directory layout:
//   <dir>/<split>.txt  token-per-line BIO sentences, blank-line separated,
//                      each preceded by "# img: <image file>" and optionally
//                      "# id: <example id>"
//   <dir>/boxes.txt    "<image file> <TYPE> x1 y1 x2 y2 orig_w orig_h"
//   <dir>/images/      image files
struct LoadedExample {
  ExamplePair pair;
  ImageTensor image;
};

struct Dataset {
  std::vector<LoadedExample> examples;
  std::map<EntityType, long> entity_counts;
};

using BoxTable = std::map<std::pair<std::string, EntityType>, BBox>;

// Sentences without boxes. Errors carry "<origin>:<line>".
std::vector<ExamplePair> ParseSentences(std::string_view contents,
                                        const std::string& origin, Split split);
std::string FormatSentences(const std::vector<ExamplePair>& examples);

BoxTable ParseBoxes(std::string_view contents, const std::string& origin);
// Boxes are written in frame coordinates with a 256 x 256 original size.
std::string FormatBoxes(const BoxTable& boxes);

// Reads an image, resizes it to size x size and scales values to [0, 1].
ImageTensor LoadImage(const std::string& path, int size = 256);
void SaveImage(const std::string& path, const ImageTensor& image);

Dataset LoadDataset(const std::string& dir, Split split,
                    bool load_images = true);
// Writes sentences, boxes and images so that LoadDataset reads them back.
// Boxes already present in boxes.txt are kept.
void SaveDataset(const std::string& dir, Split split,
                 const std::vector<LoadedExample>& examples);

std::map<EntityType, long> CountEntities(const std::vector<ExamplePair>& v);

}  // namespace spanground

#endif  // SPANGROUND_HARNESS_DATASET_H_
