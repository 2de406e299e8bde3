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

#include "mfseg/maskgen.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <utility>

#include "mfseg/image_io.hpp"

namespace mfseg {

void MaskSpec::validate() const {
  if (!(default_extent > 0.0)) throw std::invalid_argument("default_extent must be > 0");
}

double default_extent_for_width(Index width) {
  return 16.0 * static_cast<double>(width) / 512.0;
}

namespace {

template <typename Inside>
MaskTensor rasterize(const AnnotationRecord& annotation, const Dims& dims,
                     const MaskSpec& spec, MaskShape shape, Inside inside) {
  spec.validate();
  MaskTensor mask{annotation.image_id, shape,
                  Plane<float>::Zero(dims.height, dims.width)};
  for (const auto& lm : annotation.landmarks) {
    const double e = lm.extent.value_or(spec.default_extent);
    if (!(e >= 0.0)) {
      throw std::invalid_argument("image '" + annotation.image_id +
                                  "': negative landmark extent");
    }
    // Bounding box of the closed region, clipped.
    const Index x0 = std::max<Index>(0, static_cast<Index>(std::ceil(lm.cx - e)));
    const Index x1 = std::min<Index>(dims.width - 1, static_cast<Index>(std::floor(lm.cx + e)));
    const Index y0 = std::max<Index>(0, static_cast<Index>(std::ceil(lm.cy - e)));
    const Index y1 = std::min<Index>(dims.height - 1, static_cast<Index>(std::floor(lm.cy + e)));
    for (Index y = y0; y <= y1; ++y) {
      for (Index x = x0; x <= x1; ++x) {
        if (inside(static_cast<double>(x) - lm.cx, static_cast<double>(y) - lm.cy, e)) {
          mask.data(y, x) = 1.0f;
        }
      }
    }
  }
  return mask;
}

}  // namespace

MaskTensor render_round_mask(const AnnotationRecord& annotation, const Dims& dims,
                             const MaskSpec& spec) {
  return rasterize(annotation, dims, spec, MaskShape::kRound,
                   [](double dx, double dy, double r) { return dx * dx + dy * dy <= r * r; });
}

MaskTensor render_square_mask(const AnnotationRecord& annotation, const Dims& dims,
                              const MaskSpec& spec) {
  return rasterize(annotation, dims, spec, MaskShape::kSquare,
                   [](double dx, double dy, double s) {
                     return std::abs(dx) <= s && std::abs(dy) <= s;
                   });
}

MaskTensor render_mask(const AnnotationRecord& annotation, const Dims& dims,
                       const MaskSpec& spec) {
  return spec.shape_kind == MaskShape::kRound ? render_round_mask(annotation, dims, spec)
                                              : render_square_mask(annotation, dims, spec);
}

MaskReport validate_mask(const MaskTensor& mask, int max_components) {
  MaskReport report;
  const auto& m = mask.data;
  report.binary = (m == 0.0f || m == 1.0f).all();
  report.set_pixels = static_cast<std::int64_t>((m == 1.0f).count());
  report.empty = report.set_pixels == 0;

  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> seen =
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(m.rows(), m.cols(), false);
  std::deque<std::pair<Index, Index>> queue;
  for (Index y = 0; y < m.rows(); ++y) {
    for (Index x = 0; x < m.cols(); ++x) {
      if (m(y, x) != 1.0f || seen(y, x)) continue;
      ++report.components;
      seen(y, x) = true;
      queue.emplace_back(y, x);
      while (!queue.empty()) {
        const auto [cy, cx] = queue.front();
        queue.pop_front();
        constexpr int kDy[] = {-1, 1, 0, 0};
        constexpr int kDx[] = {0, 0, -1, 1};
        for (int d = 0; d < 4; ++d) {
          const Index ny = cy + kDy[d];
          const Index nx = cx + kDx[d];
          if (ny < 0 || nx < 0 || ny >= m.rows() || nx >= m.cols()) continue;
          if (m(ny, nx) != 1.0f || seen(ny, nx)) continue;
          seen(ny, nx) = true;
          queue.emplace_back(ny, nx);
        }
      }
    }
  }
  report.too_many_components = report.components > max_components;
  return report;
}

std::filesystem::path mask_filename(const MaskTensor& mask) {
  return mask.id + "_" + to_string(mask.shape_kind) + ".png";
}

std::filesystem::path write_mask(const MaskTensor& mask, const std::filesystem::path& dir) {
  const auto path = dir / mask_filename(mask);
  write_gray8(path, mask.data);
  return path;
}

LabeledImage load_labeled(const ManifestEntry& entry, const Dims& dims,
                          const MaskSpec& spec) {
  LoadedImage loaded = load_image(entry, dims);
  MaskTensor mask = render_mask(loaded.annotation, dims, spec);
  return {entry.id, std::move(loaded.image.data), std::move(mask.data)};
}

}  // namespace mfseg
