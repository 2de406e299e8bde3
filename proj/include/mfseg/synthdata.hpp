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

// Synthetic panoramic-radiograph stand-ins: a dark background, optionally a
// brighter U-shaped jaw band, and one dark Gaussian well per side in the
// lower half of the image. Each image is generated from its own derived seed,
// so image i never depends on images 0..i-1.

#ifndef MFSEG_SYNTHDATA_HPP_
#define MFSEG_SYNTHDATA_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mfseg/dataset.hpp"
#include "mfseg/lossmetrics.hpp"

namespace mfseg {

enum class BackgroundProfile { kFlat, kJawArc };

std::string to_string(BackgroundProfile profile);
BackgroundProfile parse_background_profile(const std::string& text);

struct SynthConfig {
  std::size_t count = 1;
  Dims dims{512, 256};
  std::uint64_t seed = 0;
  double extent_min = 12.0;
  double extent_max = 20.0;
  double noise_sigma = 0.03;
  BackgroundProfile profile = BackgroundProfile::kJawArc;

  // Also checks that targets fit: both bands must hold an integer centre and
  // a well of extent_max must stay on its side of the midline and inside the
  // image.
  void validate() const;
};

// Horizontal band for the left target; the right band mirrors it.
inline constexpr double kLeftBandLo = 0.15;
inline constexpr double kLeftBandHi = 0.40;
inline constexpr double kRightBandLo = 0.60;
inline constexpr double kRightBandHi = 0.85;
inline constexpr double kVerticalBandLo = 0.60;
inline constexpr double kVerticalBandHi = 0.85;
// Peak darkening of a well relative to its surroundings.
inline constexpr double kWellDepth = 0.3;

struct SyntheticDataset {
  // Same order as manifest.entries; intensities are multiples of 1/255 so a
  // PNG round trip is exact.
  std::vector<ImageTensor> images;
  DatasetManifest manifest;  // image paths are images/<id>.png
};

SyntheticDataset generate_synthetic_opg(const SynthConfig& config);

// Noise-free background intensity at (x, y).
double synthetic_background(const SynthConfig& config, double x, double y);

// Writes <dir>/images/<id>.png and <dir>/manifest.json; returns the manifest
// path.
std::filesystem::path write_synthetic(const SyntheticDataset& data,
                                      const std::filesystem::path& dir);

// In-memory image/mask pairs without a round trip through PNG.
std::vector<LabeledImage> labeled_in_memory(const SyntheticDataset& data,
                                            MaskShape shape, double default_extent);

void to_json(nlohmann::json& j, const SynthConfig& config);

}  // namespace mfseg

#endif  // MFSEG_SYNTHDATA_HPP_
