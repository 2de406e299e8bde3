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

// Point annotations to binary ground-truth masks.
//
// Pixel (x, y) has its centre at integer coordinates. A round mask sets
// (x - cx)^2 + (y - cy)^2 <= r^2, a square mask |x - cx| <= s && |y - cy| <= s,
// unioned over landmarks and clipped to the image.

#ifndef MFSEG_MASKGEN_HPP_
#define MFSEG_MASKGEN_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include "mfseg/dataset.hpp"
#include "mfseg/lossmetrics.hpp"

namespace mfseg {

struct MaskSpec {
  MaskShape shape_kind = MaskShape::kRound;
  double default_extent = 16.0;

  void validate() const;
};

// 16 px at 512 px width, proportional otherwise.
double default_extent_for_width(Index width);

struct MaskTensor {
  std::string id;
  MaskShape shape_kind = MaskShape::kRound;
  Plane<float> data;
};

MaskTensor render_round_mask(const AnnotationRecord& annotation, const Dims& dims,
                             const MaskSpec& spec);
MaskTensor render_square_mask(const AnnotationRecord& annotation, const Dims& dims,
                              const MaskSpec& spec);
MaskTensor render_mask(const AnnotationRecord& annotation, const Dims& dims,
                       const MaskSpec& spec);

struct MaskReport {
  bool binary = true;
  std::int64_t set_pixels = 0;
  int components = 0;  // 4-connected
  bool empty = false;
  bool too_many_components = false;

  bool ok() const { return binary && !empty && !too_many_components; }
};

MaskReport validate_mask(const MaskTensor& mask, int max_components = 2);

// `<id>_<shape>.png` inside `dir`, values {0, 255}.
std::filesystem::path mask_filename(const MaskTensor& mask);
std::filesystem::path write_mask(const MaskTensor& mask, const std::filesystem::path& dir);

// Loads the image at `dims` and rasterizes its mask at the same resolution.
LabeledImage load_labeled(const ManifestEntry& entry, const Dims& dims,
                          const MaskSpec& spec);

}  // namespace mfseg

#endif  // MFSEG_MASKGEN_HPP_
