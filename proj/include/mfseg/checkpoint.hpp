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

// Model checkpoint container. Layout (all integers little-endian):
//
//   8 bytes   magic "MFSEGCKP"
//   u32       container version (1)
//   u64       header length L
//   L bytes   UTF-8 JSON header:
//               {"format": "mfseg-checkpoint", "version": 1,
//                "spec": <ModelSpec>, "metadata": {...},
//                "tensors": [{"name", "kind": "parameter"|"buffer",
//                             "shape": [n, c, h, w]}, ...]}
//   payload   float32 little-endian values of each tensor, in header order
//
// See docs/checkpoint_format.md.

#ifndef MFSEG_CHECKPOINT_HPP_
#define MFSEG_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "mfseg/archzoo.hpp"

namespace mfseg {

inline constexpr char kCheckpointMagic[8] = {'M', 'F', 'S', 'E', 'G', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void save_checkpoint(const Model<float>& model, const std::filesystem::path& path,
                     const nlohmann::json& metadata = nlohmann::json::object());

struct LoadedCheckpoint {
  Model<float> model;
  nlohmann::json metadata;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

// Optional warm start: copies every tensor whose name and shape match and
// returns how many were copied. Everything else keeps its initial value.
std::size_t load_pretrained_weights(Model<float>& model,
                                    const std::filesystem::path& path);

}  // namespace mfseg

#endif  // MFSEG_CHECKPOINT_HPP_
