// Copyright 2026 The mfseg Authors. All Rights Reserved.
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

// Manifest ingestion, image loading and train/test/fold planning.
//
// Manifest schema (UTF-8 JSON, image paths relative to the manifest):
//
//   {
//     "image_dims": [width, height],
//     "entries": [
//       {"id": "p0001", "image": "images/p0001.png",
//        "landmarks": [{"side": "left", "cx": 131.0, "cy": 190.0,
//                       "extent": 16.0}]}
//     ]
//   }
//
// Landmark coordinates are source-image pixels; "extent" is optional.

#ifndef MFSEG_DATASET_HPP_
#define MFSEG_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mfseg/tensor.hpp"

namespace mfseg {

enum class Side { kLeft, kRight };

std::string to_string(Side side);

struct Dims {
  Index width = 0;
  Index height = 0;
  friend bool operator==(const Dims&, const Dims&) = default;
};

// "512x256" -> {512, 256}
Dims parse_dims(const std::string& text);
std::string to_string(const Dims& dims);

struct Landmark {
  Side side = Side::kLeft;
  double cx = 0.0;
  double cy = 0.0;
  std::optional<double> extent;
};

struct AnnotationRecord {
  std::string image_id;
  std::vector<Landmark> landmarks;

  // Throws ManifestValidationError naming the image on violation.
  void validate(const Dims& dims) const;
};

struct ManifestEntry {
  std::string id;
  std::string image;              // as written in the manifest
  std::filesystem::path image_path;  // resolved against the manifest folder
  AnnotationRecord annotation;
};

struct DatasetManifest {
  Dims image_dims;
  std::vector<ManifestEntry> entries;

  std::vector<std::string> ids() const;
  const ManifestEntry& at(const std::string& id) const;
};

class ManifestParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ManifestValidationError : public std::runtime_error {
 public:
  ManifestValidationError(std::string entry_id, const std::string& message)
      : std::runtime_error("entry '" + entry_id + "': " + message),
        entry_id_(std::move(entry_id)) {}
  const std::string& entry_id() const { return entry_id_; }

 private:
  std::string entry_id_;
};

DatasetManifest load_manifest(const std::filesystem::path& path);

// check_files = false skips the image existence check (in-memory datasets).
DatasetManifest parse_manifest(const nlohmann::json& doc,
                               const std::filesystem::path& base_dir,
                               bool check_files = true);

nlohmann::json manifest_to_json(const DatasetManifest& manifest);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Drops the listed ids; unknown ids are ignored.
DatasetManifest exclude_entries(const DatasetManifest& manifest,
                                const std::vector<std::string>& ids);

struct SplitPlan {
  std::vector<std::string> train_ids;  // sorted
  std::vector<std::string> test_ids;   // sorted
  std::uint64_t seed = 0;
};

struct FoldPlan {
  int k = 0;
  std::vector<std::vector<std::string>> folds;  // each sorted
  std::uint64_t seed = 0;

  // Every fold except `fold`, merged and sorted.
  std::vector<std::string> training_ids(int fold) const;
};

// Uniform sampling without replacement: ids are sorted, shuffled with the
// seeded generator, and the first n_train taken.
SplitPlan split_ids(std::vector<std::string> ids, std::size_t n_train,
                    std::uint64_t seed);
SplitPlan split_dataset(const DatasetManifest& manifest, std::size_t n_train,
                        std::uint64_t seed);

// Shuffled contiguous chunks; the first |ids| mod k folds get one extra id.
FoldPlan make_folds(const std::vector<std::string>& train_ids, int k,
                    std::uint64_t seed);

void to_json(nlohmann::json& j, const SplitPlan& plan);
void to_json(nlohmann::json& j, const FoldPlan& plan);

struct ImageTensor {
  std::string id;
  Plane<float> data;  // [0, 1]
};

struct LoadedImage {
  ImageTensor image;
  AnnotationRecord annotation;  // remapped to the target resolution
};

// Decode, bilinear-resize to `target`, scale by 1/255 and remap landmarks by
// the same factors. Extents scale by the geometric mean of the two factors.
LoadedImage load_image(const ManifestEntry& entry, const Dims& target);

AnnotationRecord rescale(const AnnotationRecord& record, double sx, double sy);

// Image paired with its ground-truth mask; the unit the trainer consumes.
struct LabeledImage {
  std::string id;
  Plane<float> image;
  Plane<float> mask;
};

}  // namespace mfseg

#endif  // MFSEG_DATASET_HPP_
