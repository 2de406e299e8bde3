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

#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "mfseg/archzoo.hpp"
#include "mfseg/blocks.hpp"

namespace mfseg {
namespace {

using testing::identical;
using testing::nine_variants;
using testing::variant;

Tensor<float> random_batch(Index n, Index h, Index w, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<float> t(n, 1, h, w);
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<float>(rng.uniform());
  return t;
}

// Sum of k*k*in*out + out over every conv of unet(depth 1, width 2):
// 20 + 38 (encoder), 76 + 148 (bottleneck), 130 (4x4 up), 74 + 38 (decoder),
// 3 (1x1 head).
TEST_CASE("unet depth 1 width 2 has 527 parameters") {
  auto spec = variant(Family::kUnet, Backbone::kNone, 1, 2);
  CHECK(20 + 38 + 76 + 148 + 130 + 74 + 38 + 3 == 527);
  CHECK(count_parameters(build_model(spec)) == 527);
}

TEST_CASE("parameter count grows with width") {
  for (const auto& s : nine_variants(2, 4)) {
    auto wide = s;
    wide.base_width = 8;
    CHECK(count_parameters(build_model(wide)) > count_parameters(build_model(s)));
  }
}

TEST_CASE("nine variants map 64x32 to a one-channel map in (0, 1)") {
  for (const auto& s : nine_variants(3, 8)) {
    CAPTURE(display_name(s));
    auto model = build_model(s);
    const auto y = forward(model, random_batch(2, 32, 64, 3));
    CHECK(y.shape() == Shape{2, 1, 32, 64});
    CHECK(y.array().minCoeff() > 0.0f);
    CHECK(y.array().maxCoeff() < 1.0f);
    CHECK(y.array().isFinite().all());
  }
}

TEST_CASE("output size equals input size across the grid") {
  for (const auto& s : nine_variants(2, 4)) {
    auto model = build_model(s);
    for (Index h : {32, 64, 128}) {
      for (Index w : {32, 64}) {
        CAPTURE(display_name(s));
        CAPTURE(h);
        CAPTURE(w);
        const auto y = forward(model, random_batch(1, h, w, 4));
        CHECK(y.shape() == Shape{1, 1, h, w});
      }
    }
  }
}

TEST_CASE("indivisible inputs are rejected") {
  auto unet = build_model(variant(Family::kUnet, Backbone::kNone, 3, 4));
  CHECK(unet.input_divisor() == 8);
  CHECK_THROWS_AS(forward(unet, random_batch(1, 20, 32, 1)), std::invalid_argument);
  auto link = build_model(variant(Family::kLinknet, Backbone::kResnet18, 2, 4));
  CHECK(forward(link, random_batch(1, 64, 64, 1)).shape() == Shape{1, 1, 64, 64});
  CHECK_THROWS_AS(forward(link, random_batch(1, 36, 64, 1)), std::invalid_argument);
}

TEST_CASE("large finite inputs give finite outputs") {
  for (const auto& s : nine_variants(2, 4)) {
    auto model = build_model(s);
    Tensor<float> x = random_batch(1, 32, 32, 9);
    x.array() = (x.array() - 0.5f) * 200.0f;
    const auto y = forward(model, x);
    CHECK(y.array().isFinite().all());
    CHECK(y.array().minCoeff() >= 0.0f);
    CHECK(y.array().maxCoeff() <= 1.0f);
  }
}

TEST_CASE("same spec builds identical weights and eval is repeatable") {
  for (const auto& s : nine_variants(2, 4)) {
    auto a = build_model(s);
    auto b = build_model(s);
    const auto& pa = a.parameters().parameters();
    const auto& pb = b.parameters().parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(pa[i].name == pb[i].name);
      CHECK(identical(pa[i].var->value, pb[i].var->value));
    }
    const auto x = random_batch(2, 32, 32, 5);
    CHECK(identical(forward(a, x), forward(a, x)));
    CHECK(identical(forward(a, x), forward(b, x)));
  }
  auto s = variant(Family::kUnet, Backbone::kNone, 2, 4);
  auto other = s;
  other.seed = 2;
  CHECK_FALSE(identical(build_model(s).parameters().parameters()[0].var->value,
                        build_model(other).parameters().parameters()[0].var->value));
}

TEST_CASE("zero dropout in training mode equals eval mode") {
  for (auto f : {Family::kUnet, Family::kAttentionUnet}) {
    auto s = variant(f, Backbone::kNone, 2, 4);
    s.dropout_schedule = {0.0, 0.0, 0.0};
    auto model = build_model(s);
    const auto x = random_batch(2, 32, 32, 6);
    const auto eval = forward(model, x);
    model.set_mode(Mode::kTrain);
    CHECK(identical(forward(model, x), eval));
  }
  auto s = variant(Family::kUnet, Backbone::kNone, 2, 4);
  s.dropout_schedule = {0.3, 0.3, 0.3};
  auto model = build_model(s);
  const auto x = random_batch(1, 32, 32, 6);
  const auto eval = forward(model, x);
  model.set_mode(Mode::kTrain);
  CHECK_FALSE(identical(forward(model, x), eval));
}

TEST_CASE("attention coefficients lie in [0, 1] at skip resolution") {
  auto model = build_model(variant(Family::kAttentionUnet, Backbone::kNone, 3, 4));
  std::vector<Tensor<float>> maps;
  model.predict(random_batch(2, 32, 64, 7), nullptr, &maps);
  REQUIRE(maps.size() == 3);
  std::multiset<Index> heights;
  for (const auto& m : maps) {
    CHECK(m.n() == 2);
    CHECK(m.c() == 1);
    CHECK(m.w() == 2 * m.h());
    heights.insert(m.h());
    CHECK(m.array().minCoeff() >= 0.0f);
    CHECK(m.array().maxCoeff() <= 1.0f);
  }
  CHECK(heights == std::multiset<Index>{8, 16, 32});
}

TEST_CASE("zeroed residual block is the identity") {
  for (Index out : {Index{4}, Index{6}}) {
    ParameterStore<double> store;
    Rng rng(1);
    BuildContext<double> ctx{store, rng};
    ResidualBlock<double> block(ctx, "res", 4, out, 0.0);
    for (const auto& p : store.parameters()) p.var->value.array().setZero();
    if (out != 4) {
      // Projection set to [I; 0] so the shortcut keeps the input channels.
      auto w = store.find("res.proj.weight");
      REQUIRE(w);
      for (Index c = 0; c < 4; ++c) w->value(c, c, 0, 0) = 1.0;
    }
    Rng data(2);
    const auto x = testing::random_tensor({2, 4, 5, 6}, data);
    for (bool training : {false, true}) {
      ForwardContext<double> fc{training, &rng, nullptr};
      const auto y = block(constant(x), fc)->value;
      REQUIRE(y.shape() == Shape{2, out, 5, 6});
      for (Index n = 0; n < 2; ++n) {
        for (Index c = 0; c < out; ++c) {
          if (c < 4) {
            CHECK((y.plane(n, c) == x.plane(n, c)).all());
          } else {
            CHECK((y.plane(n, c) == 0.0).all());
          }
        }
      }
    }
  }
}

TEST_CASE("unet++ heads and pruning") {
  auto s = variant(Family::kUnetpp, Backbone::kNone, 3, 4, true);
  auto model = build_model(s);
  ForwardContext<float> fc;
  const auto x = random_batch(1, 32, 32, 8);
  CHECK(model.forward_heads(constant(x), fc).size() == 3);
  for (int level = 1; level <= 3; ++level) {
    auto p = s;
    p.prune_level = level;
    auto pruned = build_model(p);
    ForwardContext<float> pfc;
    const auto heads = pruned.forward_heads(constant(x), pfc);
    REQUIRE(heads.size() == 1);
    const auto all = model.forward_heads(constant(x), fc);
    CHECK(identical(heads[0]->value, all[static_cast<std::size_t>(level - 1)]->value));
  }
  ForwardContext<float> train_fc{true, nullptr, nullptr};
  CHECK(model.forward_heads(constant(x), train_fc).size() == 3);
}

TEST_CASE("spec validation") {
  auto bad = variant(Family::kUnet, Backbone::kResnet18, 2, 4);
  CHECK_THROWS_AS(build_model(bad), ModelSpecError);
  bad = variant(Family::kFpn, Backbone::kNone, 2, 4);
  CHECK_THROWS_AS(build_model(bad), ModelSpecError);
  bad = variant(Family::kUnet, Backbone::kNone, 0, 4);
  CHECK_THROWS_AS(build_model(bad), ModelSpecError);
  bad = variant(Family::kUnet, Backbone::kNone, 2, 4);
  bad.dropout_schedule = {0.1, 0.2};
  CHECK_THROWS_AS(build_model(bad), ModelSpecError);
  bad.dropout_schedule = {0.1, 0.2, 1.0};
  CHECK_THROWS_AS(build_model(bad), ModelSpecError);
  bad = variant(Family::kUnet, Backbone::kNone, 2, 4, true);
  CHECK_THROWS_AS(build_model(bad), ModelSpecError);
  CHECK_THROWS(parse_family("segnet"));
}

TEST_CASE("canonical sizing and labels") {
  const auto c = ModelSpec::canonical_unet();
  CHECK(c.depth == 4);
  CHECK(c.base_width == 64);
  CHECK(c.dropout_schedule == std::vector<double>{0.1, 0.1, 0.2, 0.2, 0.3});
  std::vector<std::string> names;
  for (const auto& s : nine_variants(2, 4)) names.push_back(display_name(s));
  CHECK(names == std::vector<std::string>{"U-Net", "U-Net++", "U-Net++", "ResU-Net",
                                          "ResU-Net++", "U-Net Attention", "FPN ResNet18",
                                          "FPN InceptionV3", "LinkNet ResNet18",
                                          "LinkNet InceptionV3"});
  const nlohmann::json j = c;
  CHECK(j.get<ModelSpec>().dropout_schedule == c.dropout_schedule);
}

}  // namespace
}  // namespace mfseg
