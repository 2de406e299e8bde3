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

// Shared test inputs: the nine table variants and small synthetic sets.

#ifndef MFSEG_TESTS_FIXTURES_HPP_
#define MFSEG_TESTS_FIXTURES_HPP_

#include <vector>

#include "mfseg/archzoo.hpp"
#include "mfseg/synthdata.hpp"

namespace mfseg::testing {

inline ModelSpec variant(Family f, Backbone b, int depth, int width, bool deep = false) {
  ModelSpec s;
  s.family = f;
  s.backbone = b;
  s.depth = depth;
  s.base_width = width;
  s.deep_supervision = deep;
  s.seed = 1;
  return s;
}

// unet, unetpp, unetpp + deep supervision, resunet, resunetpp,
// attention_unet, fpn x2, linknet x2.
inline std::vector<ModelSpec> nine_variants(int depth, int width) {
  return {variant(Family::kUnet, Backbone::kNone, depth, width),
          variant(Family::kUnetpp, Backbone::kNone, depth, width),
          variant(Family::kUnetpp, Backbone::kNone, depth, width, true),
          variant(Family::kResunet, Backbone::kNone, depth, width),
          variant(Family::kResunetpp, Backbone::kNone, depth, width),
          variant(Family::kAttentionUnet, Backbone::kNone, depth, width),
          variant(Family::kFpn, Backbone::kResnet18, depth, width),
          variant(Family::kFpn, Backbone::kInceptionV3, depth, width),
          variant(Family::kLinknet, Backbone::kResnet18, depth, width),
          variant(Family::kLinknet, Backbone::kInceptionV3, depth, width)};
}

// Desk-scale synthetic data at 64x32 with targets a few pixels wide.
inline SynthConfig desk_synth(std::size_t count, std::uint64_t seed) {
  SynthConfig c;
  c.count = count;
  c.dims = {64, 32};
  c.seed = seed;
  c.extent_min = 3.0;
  c.extent_max = 4.5;
  c.noise_sigma = 0.03;
  c.profile = BackgroundProfile::kJawArc;
  return c;
}

inline ModelSpec desk_unet(std::uint64_t seed) {
  ModelSpec s;
  s.family = Family::kUnet;
  s.depth = 2;
  s.base_width = 8;
  s.seed = seed;
  return s;
}

}  // namespace mfseg::testing

#endif  // MFSEG_TESTS_FIXTURES_HPP_
