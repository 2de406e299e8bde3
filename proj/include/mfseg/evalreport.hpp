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

// Test-set evaluation, prediction overlays, result tables and ROC plots.

#ifndef MFSEG_EVALREPORT_HPP_
#define MFSEG_EVALREPORT_HPP_

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfseg/archzoo.hpp"
#include "mfseg/dataset.hpp"
#include "mfseg/lossmetrics.hpp"
#include "mfseg/maskgen.hpp"

namespace mfseg {

// Anything that turns an image into a probability map of the same size.
using Predictor = std::function<Plane<float>(const ImageTensor&)>;

// Scores every image against ground_truth[id]; throws if an id has none.
MetricsReport evaluate(const Predictor& predictor, const std::vector<ImageTensor>& images,
                       const std::map<std::string, Plane<float>>& ground_truth,
                       MaskShape shape, double threshold, bool with_roc = false);

MetricsReport evaluate(Model<float>& model, const std::vector<ImageTensor>& images,
                       const std::map<std::string, Plane<float>>& ground_truth,
                       MaskShape shape, double threshold, bool with_roc = false);

// Overlay colour (RGB) and opacity for predicted pixels.
inline constexpr std::array<float, 3> kHighlightRgb = {1.0f, 0.0f, 0.0f};
inline constexpr float kHighlightOpacity = 0.5f;

struct OverlayImage {
  std::string source_id;
  std::array<Plane<float>, 3> rgb;
};

// Grayscale source in all three channels, blended towards kHighlightRgb
// where the prediction is 1.
OverlayImage render_overlay(const ImageTensor& image, const MaskTensor& prediction);
void write_overlay(const OverlayImage& overlay, const std::filesystem::path& path);

enum class Split { kCvValidation, kTest };

std::string to_string(Split split);

struct TableEntry {
  std::string model;  // display name
  MaskShape mask_shape = MaskShape::kRound;
  Split split = Split::kTest;
  MetricsReport report;
};

class DuplicateEntryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr const char* kResultsHeader =
    "model,mask_shape,cv_val_dsc,cv_val_iou,test_dsc,test_iou";

// One row per (model, mask shape): round rows first, then square; within a
// shape the nine known models in their canonical order, then any others by
// name. Missing splits leave empty cells. Values use 4 decimal places.
std::string results_table(const std::vector<TableEntry>& entries);

// Canonical row order of the nine model variants.
const std::vector<std::string>& canonical_model_order();

struct RocPlot {
  std::size_t n_points = 0;
  std::string auc_label;  // "AUC = 0.987"
};

// TPR against FPR with the chance diagonal and the AUC label, as PNG.
RocPlot plot_roc(const RocCurve& roc, const std::filesystem::path& out_path);

}  // namespace mfseg

#endif  // MFSEG_EVALREPORT_HPP_
