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

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the code under test.

#ifndef MFSEG_TESTS_ORACLES_HPP_
#define MFSEG_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "mfseg/dataset.hpp"
#include "mfseg/lossmetrics.hpp"
#include "mfseg/random.hpp"

namespace mfseg::testing {

// Per-pixel predicate over the whole grid, union over landmarks.
inline Plane<float> brute_force_mask(const AnnotationRecord& rec, const Dims& dims,
                                     MaskShape shape, double default_extent) {
  Plane<float> out = Plane<float>::Zero(dims.height, dims.width);
  for (Index y = 0; y < dims.height; ++y) {
    for (Index x = 0; x < dims.width; ++x) {
      for (const auto& lm : rec.landmarks) {
        const double e = lm.extent.value_or(default_extent);
        const double dx = static_cast<double>(x) - lm.cx;
        const double dy = static_cast<double>(y) - lm.cy;
        const bool in = shape == MaskShape::kRound
                            ? dx * dx + dy * dy <= e * e
                            : std::abs(dx) <= e && std::abs(dy) <= e;
        if (in) out(y, x) = 1.0f;
      }
    }
  }
  return out;
}

// Random 1-2 landmark case: grid up to 40x40, fractional centres inside,
// extents in [0, 8) with an occasional explicit per-landmark value.
struct MaskCase {
  AnnotationRecord record;
  Dims dims;
  double default_extent = 1.0;
};

inline MaskCase random_mask_case(Rng& rng) {
  MaskCase c;
  c.dims = {4 + static_cast<Index>(rng.below(37)), 4 + static_cast<Index>(rng.below(37))};
  c.default_extent = rng.uniform(0.01, 8.0);
  c.record.image_id = "case";
  const int n = 1 + static_cast<int>(rng.below(2));
  for (int i = 0; i < n; ++i) {
    Landmark lm;
    lm.side = i == 0 ? Side::kLeft : Side::kRight;
    const bool integer_centre = rng.below(2) == 0;
    lm.cx = rng.uniform(0.0, static_cast<double>(c.dims.width - 1));
    lm.cy = rng.uniform(0.0, static_cast<double>(c.dims.height - 1));
    if (integer_centre) {
      lm.cx = std::round(lm.cx);
      lm.cy = std::round(lm.cy);
    }
    if (rng.below(3) == 0) lm.extent = std::floor(rng.uniform(0.0, 8.0) * 2.0) / 2.0;
    c.record.landmarks.push_back(lm);
  }
  return c;
}

// Counts by direct enumeration.
struct PairCounts {
  std::int64_t a = 0, b = 0, both = 0, either = 0;
};

inline PairCounts count_pair(const Plane<float>& a, const Plane<float>& b) {
  PairCounts c;
  for (Index r = 0; r < a.rows(); ++r) {
    for (Index k = 0; k < a.cols(); ++k) {
      const bool x = a(r, k) == 1.0f;
      const bool y = b(r, k) == 1.0f;
      c.a += x;
      c.b += y;
      c.both += x && y;
      c.either += x || y;
    }
  }
  return c;
}

inline Plane<float> random_mask(Index rows, Index cols, double density, Rng& rng) {
  Plane<float> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform() < density ? 1.0f : 0.0f;
  return m;
}

// Worst relative error |analytic - numeric| / max(|numeric|, floor) of a
// loss gradient against central differences.
inline double loss_gradient_error(
    const std::function<LossValue<double>(const Plane<double>&)>& f,
    const Plane<double>& at, double h = 1e-6, double floor = 1e-8) {
  const auto analytic = f(at).gradient;
  double worst = 0.0;
  Plane<double> p = at;
  for (Index i = 0; i < p.size(); ++i) {
    const double x0 = p.data()[i];
    p.data()[i] = x0 + h;
    const double up = f(p).loss;
    p.data()[i] = x0 - h;
    const double down = f(p).loss;
    p.data()[i] = x0;
    const double numeric = (up - down) / (2.0 * h);
    const double err = std::abs(analytic.data()[i] - numeric) /
                       std::max({std::abs(numeric), std::abs(analytic.data()[i]), floor});
    worst = std::max(worst, err);
  }
  return worst;
}

// Probabilities kept away from the clamp so differences stay on one branch.
inline Plane<double> random_probabilities(Index rows, Index cols, Rng& rng) {
  Plane<double> p(rows, cols);
  for (Index i = 0; i < p.size(); ++i) p.data()[i] = rng.uniform(0.05, 0.95);
  return p;
}

}  // namespace mfseg::testing

#endif  // MFSEG_TESTS_ORACLES_HPP_
