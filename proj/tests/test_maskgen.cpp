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

#include <filesystem>

#include "doctest.h"
#include "mfseg/image_io.hpp"
#include "mfseg/maskgen.hpp"
#include "oracles.hpp"

namespace mfseg {
namespace {

using testing::brute_force_mask;
using testing::random_mask_case;

AnnotationRecord one(double cx, double cy, std::optional<double> extent = std::nullopt) {
  return {"m", {{Side::kLeft, cx, cy, extent}}};
}

std::int64_t set_count(const MaskTensor& m) { return (m.data == 1.0f).count(); }

TEST_CASE("round mask pixel counts") {
  const Dims d{16, 16};
  MaskSpec spec{MaskShape::kRound, 3.0};
  CHECK(set_count(render_round_mask(one(8, 8), d, spec)) == 29);
  CHECK(set_count(render_round_mask(one(8, 8, 0.0), d, spec)) == 1);
  CHECK(render_round_mask(one(8, 8, 0.0), d, spec).data(8, 8) == 1.0f);
}

TEST_CASE("square mask pixel counts") {
  const Dims d{16, 16};
  MaskSpec spec{MaskShape::kSquare, 2.0};
  CHECK(set_count(render_square_mask(one(8, 8), d, spec)) == 25);
  CHECK(set_count(render_square_mask(one(0, 0), d, spec)) == 9);
  CHECK(set_count(render_square_mask(one(5, 5, 0.0), d, spec)) == 1);
}

TEST_CASE("disjoint landmarks add up, overlapping ones merge") {
  const Dims d{40, 20};
  MaskSpec spec{MaskShape::kRound, 3.0};
  AnnotationRecord two{"m", {{Side::kLeft, 8, 10, {}}, {Side::kRight, 30, 10, {}}}};
  CHECK(set_count(render_round_mask(two, d, spec)) == 58);
  CHECK(validate_mask(render_round_mask(two, d, spec)).components == 2);

  AnnotationRecord overlap{"m", {{Side::kLeft, 10, 10, {}}, {Side::kRight, 12, 10, {}}}};
  const auto m = render_round_mask(overlap, d, spec);
  CHECK(set_count(m) < 58);
  CHECK((m.data == brute_force_mask(overlap, d, MaskShape::kRound, 3.0)).all());
}

TEST_CASE("rasterizer equals the brute-force predicate") {
  Rng rng(41);
  for (auto shape : {MaskShape::kRound, MaskShape::kSquare}) {
    for (int i = 0; i < 100; ++i) {
      const auto c = random_mask_case(rng);
      const auto m = render_mask(c.record, c.dims, {shape, c.default_extent});
      const auto want = brute_force_mask(c.record, c.dims, shape, c.default_extent);
      REQUIRE(m.data.rows() == c.dims.height);
      REQUIRE(m.data.cols() == c.dims.width);
      CHECK((m.data == want).all());
      CHECK(m.shape_kind == shape);
    }
  }
}

TEST_CASE("larger extent never unsets a pixel") {
  Rng rng(43);
  for (auto shape : {MaskShape::kRound, MaskShape::kSquare}) {
    for (int i = 0; i < 50; ++i) {
      auto c = random_mask_case(rng);
      for (auto& lm : c.record.landmarks) lm.extent.reset();
      const auto small = render_mask(c.record, c.dims, {shape, c.default_extent});
      const auto big = render_mask(c.record, c.dims, {shape, c.default_extent + rng.uniform(0, 3)});
      CHECK(((small.data == 1.0f) <= (big.data == 1.0f)).all());
    }
  }
}

TEST_CASE("round mask is symmetric about an integer centre") {
  const Dims d{31, 25};
  MaskSpec spec{MaskShape::kRound, 1.0};
  for (double r : {0.0, 1.0, 2.5, 4.0, 6.3}) {
    const Index cx = 15, cy = 12;
    const auto m = render_round_mask(one(cx, cy, r), d, spec);
    for (Index y = 0; y < d.height; ++y) {
      for (Index x = 0; x < d.width; ++x) {
        const Index rx = 2 * cx - x, ry = 2 * cy - y;
        if (rx < 0 || ry < 0 || rx >= d.width || ry >= d.height) continue;
        CHECK(m.data(y, x) == m.data(ry, rx));
        CHECK(m.data(y, x) == m.data(y, rx));
        CHECK(m.data(y, x) == m.data(ry, x));
      }
    }
  }
}

TEST_CASE("invalid extents") {
  const Dims d{16, 16};
  CHECK_THROWS_AS(render_round_mask(one(8, 8), d, {MaskShape::kRound, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(render_round_mask(one(8, 8, -1.0), d, {MaskShape::kRound, 3.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(render_square_mask(one(8, 8), d, {MaskShape::kSquare, -2.0}),
                  std::invalid_argument);
}

TEST_CASE("validate_mask reports") {
  MaskTensor m{"x", MaskShape::kRound, Plane<float>::Zero(8, 8)};
  auto r = validate_mask(m);
  CHECK(r.empty);
  CHECK_FALSE(r.ok());

  m.data(1, 1) = 1.0f;
  m.data(6, 6) = 1.0f;
  r = validate_mask(m);
  CHECK(r.components == 2);
  CHECK(r.ok());
  // Diagonal neighbours are separate components under 4-connectivity.
  m.data(2, 2) = 1.0f;
  r = validate_mask(m);
  CHECK(r.components == 3);
  CHECK(r.too_many_components);
  CHECK(validate_mask(m, 3).ok());

  m.data(4, 4) = 0.5f;
  r = validate_mask(m, 5);
  CHECK_FALSE(r.binary);
  CHECK_FALSE(r.ok());
}

TEST_CASE("mask files round trip as 0/255 PNG") {
  const auto dir = std::filesystem::temp_directory_path() / "mfseg_test_maskgen";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  auto m = render_square_mask({"p01", {{Side::kRight, 10, 5, 3.0}}}, {20, 12},
                              {MaskShape::kSquare, 2.0});
  CHECK(mask_filename(m) == "p01_square.png");
  const auto path = write_mask(m, dir);
  const auto back = read_gray8(path);
  CHECK(((back == 0.0f) || (back == 255.0f)).all());
  CHECK(((back / 255.0f) == m.data).all());
  std::filesystem::remove_all(dir);
}

TEST_CASE("default extent scales with width") {
  CHECK(default_extent_for_width(512) == 16.0);
  CHECK(default_extent_for_width(64) == 2.0);
}

}  // namespace
}  // namespace mfseg
