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

#include "mfseg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mfseg/image_io.hpp"
#include "mfseg/random.hpp"

namespace mfseg {

std::string to_string(Side side) { return side == Side::kLeft ? "left" : "right"; }

Dims parse_dims(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument("missing 'x'");
    std::size_t used = 0;
    const long w = std::stol(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument("bad width");
    const std::string rest = text.substr(x + 1);
    const long h = std::stol(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("bad height");
    if (w <= 0 || h <= 0) throw std::invalid_argument("non-positive");
    return {w, h};
  } catch (const std::exception&) {
    throw std::invalid_argument("dimensions must look like WIDTHxHEIGHT, got '" +
                                text + "'");
  }
}

std::string to_string(const Dims& dims) {
  return std::to_string(dims.width) + "x" + std::to_string(dims.height);
}

void AnnotationRecord::validate(const Dims& dims) const {
  if (landmarks.empty() || landmarks.size() > 2) {
    throw ManifestValidationError(image_id, "needs 1 or 2 landmarks, has " +
                                                std::to_string(landmarks.size()));
  }
  if (landmarks.size() == 2 && landmarks[0].side == landmarks[1].side) {
    throw ManifestValidationError(image_id, "both landmarks are on the " +
                                                to_string(landmarks[0].side) + " side");
  }
  for (const auto& lm : landmarks) {
    if (!(lm.cx >= 0.0 && lm.cx < static_cast<double>(dims.width) && lm.cy >= 0.0 &&
          lm.cy < static_cast<double>(dims.height))) {
      std::ostringstream os;
      os << "landmark (" << lm.cx << ", " << lm.cy << ") outside "
         << to_string(dims);
      throw ManifestValidationError(image_id, os.str());
    }
    if (lm.extent && !(*lm.extent >= 0.0)) {
      throw ManifestValidationError(image_id, "negative landmark extent");
    }
  }
}

std::vector<std::string> DatasetManifest::ids() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.id);
  return out;
}

const ManifestEntry& DatasetManifest::at(const std::string& id) const {
  for (const auto& e : entries) {
    if (e.id == id) return e;
  }
  throw std::out_of_range("no manifest entry '" + id + "'");
}

namespace {

Side parse_side(const std::string& text, const std::string& id) {
  if (text == "left") return Side::kLeft;
  if (text == "right") return Side::kRight;
  throw ManifestValidationError(id, "side must be 'left' or 'right', got '" + text + "'");
}

}  // namespace

DatasetManifest parse_manifest(const nlohmann::json& doc,
                               const std::filesystem::path& base_dir,
                               bool check_files) {
  DatasetManifest manifest;
  std::set<std::string> seen;
  try {
    if (!doc.is_object()) throw ManifestParseError("manifest must be a JSON object");
    const auto& dims = doc.at("image_dims");
    if (!dims.is_array() || dims.size() != 2) {
      throw ManifestParseError("image_dims must be [width, height]");
    }
    manifest.image_dims = {dims.at(0).get<Index>(), dims.at(1).get<Index>()};
    if (manifest.image_dims.width <= 0 || manifest.image_dims.height <= 0) {
      throw ManifestParseError("image_dims must be positive");
    }
    for (const auto& item : doc.at("entries")) {
      ManifestEntry entry;
      entry.id = item.at("id").get<std::string>();
      entry.image = item.at("image").get<std::string>();
      entry.image_path = base_dir / entry.image;
      entry.annotation.image_id = entry.id;
      for (const auto& lm : item.at("landmarks")) {
        Landmark landmark;
        landmark.side = parse_side(lm.at("side").get<std::string>(), entry.id);
        landmark.cx = lm.at("cx").get<double>();
        landmark.cy = lm.at("cy").get<double>();
        if (lm.contains("extent") && !lm.at("extent").is_null()) {
          landmark.extent = lm.at("extent").get<double>();
        }
        entry.annotation.landmarks.push_back(landmark);
      }
      if (!seen.insert(entry.id).second) {
        throw ManifestValidationError(entry.id, "duplicate image id");
      }
      entry.annotation.validate(manifest.image_dims);
      if (check_files && !std::filesystem::is_regular_file(entry.image_path)) {
        throw ManifestValidationError(entry.id,
                                      "image not found: " + entry.image_path.string());
      }
      manifest.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ManifestParseError(std::string("malformed manifest: ") + e.what());
  }
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestParseError("cannot open manifest " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ManifestParseError("malformed manifest " + path.string() + ": " + e.what());
  }
  return parse_manifest(doc, path.parent_path());
}

nlohmann::json manifest_to_json(const DatasetManifest& manifest) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    nlohmann::json landmarks = nlohmann::json::array();
    for (const auto& lm : e.annotation.landmarks) {
      nlohmann::json j{{"side", to_string(lm.side)}, {"cx", lm.cx}, {"cy", lm.cy}};
      if (lm.extent) j["extent"] = *lm.extent;
      landmarks.push_back(j);
    }
    entries.push_back({{"id", e.id}, {"image", e.image}, {"landmarks", landmarks}});
  }
  return {{"image_dims", {manifest.image_dims.width, manifest.image_dims.height}},
          {"entries", entries}};
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  out << manifest_to_json(manifest).dump(2) << "\n";
}

DatasetManifest exclude_entries(const DatasetManifest& manifest,
                                const std::vector<std::string>& ids) {
  const std::set<std::string> drop(ids.begin(), ids.end());
  DatasetManifest out;
  out.image_dims = manifest.image_dims;
  for (const auto& e : manifest.entries) {
    if (!drop.count(e.id)) out.entries.push_back(e);
  }
  return out;
}

SplitPlan split_ids(std::vector<std::string> ids, std::size_t n_train,
                    std::uint64_t seed) {
  if (n_train > ids.size()) {
    throw std::invalid_argument("n_train " + std::to_string(n_train) +
                                " exceeds dataset size " + std::to_string(ids.size()));
  }
  std::sort(ids.begin(), ids.end());
  Rng rng(derive_seed(seed, Stream::kSplit));
  rng.shuffle(ids);
  SplitPlan plan;
  plan.seed = seed;
  plan.train_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  plan.test_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
  std::sort(plan.train_ids.begin(), plan.train_ids.end());
  std::sort(plan.test_ids.begin(), plan.test_ids.end());
  return plan;
}

SplitPlan split_dataset(const DatasetManifest& manifest, std::size_t n_train,
                        std::uint64_t seed) {
  return split_ids(manifest.ids(), n_train, seed);
}

FoldPlan make_folds(const std::vector<std::string>& train_ids, int k,
                    std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("k must be >= 2");
  if (train_ids.size() < static_cast<std::size_t>(k)) {
    throw std::invalid_argument("cannot make " + std::to_string(k) + " folds from " +
                                std::to_string(train_ids.size()) + " ids");
  }
  std::vector<std::string> ids = train_ids;
  std::sort(ids.begin(), ids.end());
  Rng rng(derive_seed(seed, Stream::kFolds));
  rng.shuffle(ids);
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  const std::size_t base = ids.size() / static_cast<std::size_t>(k);
  const std::size_t extra = ids.size() % static_cast<std::size_t>(k);
  std::size_t at = 0;
  for (std::size_t f = 0; f < static_cast<std::size_t>(k); ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    std::vector<std::string> fold(ids.begin() + static_cast<std::ptrdiff_t>(at),
                                  ids.begin() + static_cast<std::ptrdiff_t>(at + size));
    std::sort(fold.begin(), fold.end());
    plan.folds.push_back(std::move(fold));
    at += size;
  }
  return plan;
}

std::vector<std::string> FoldPlan::training_ids(int fold) const {
  std::vector<std::string> out;
  for (int f = 0; f < k; ++f) {
    if (f == fold) continue;
    out.insert(out.end(), folds[static_cast<std::size_t>(f)].begin(),
               folds[static_cast<std::size_t>(f)].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void to_json(nlohmann::json& j, const SplitPlan& plan) {
  j = nlohmann::json{
      {"seed", plan.seed}, {"train_ids", plan.train_ids}, {"test_ids", plan.test_ids}};
}

void to_json(nlohmann::json& j, const FoldPlan& plan) {
  j = nlohmann::json{{"k", plan.k}, {"seed", plan.seed}, {"folds", plan.folds}};
}

AnnotationRecord rescale(const AnnotationRecord& record, double sx, double sy) {
  AnnotationRecord out = record;
  const double s = std::sqrt(sx * sy);
  for (auto& lm : out.landmarks) {
    lm.cx *= sx;
    lm.cy *= sy;
    if (lm.extent) *lm.extent *= s;
  }
  return out;
}

LoadedImage load_image(const ManifestEntry& entry, const Dims& target) {
  const Plane<float> raw = read_gray8(entry.image_path);
  const double sx = static_cast<double>(target.width) / static_cast<double>(raw.cols());
  const double sy = static_cast<double>(target.height) / static_cast<double>(raw.rows());
  LoadedImage out;
  out.image.id = entry.id;
  out.image.data =
      (resize_bilinear(raw, target.width, target.height) / 255.0f).max(0.0f).min(1.0f);
  out.annotation = rescale(entry.annotation, sx, sy);
  return out;
}

}  // namespace mfseg
