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

// Encoder-decoder segmentation networks producing a one-channel probability
// map:
//
//   unet            two 3x3 conv + ReLU per stage, 2x2 max-pool down,
//                   4x4/stride-2 transposed conv up, concatenated skips.
//   unetpp          nested dense skip grid X(i, j); optional deep
//                   supervision heads on X(0, 1..depth) with pruning.
//   resunet         unet with pre-activation residual blocks.
//   resunetpp       resunet + squeeze-excitation on encoder blocks and an
//                   atrous pyramid at the bridge.
//   attention_unet  unet with additive attention gates on every skip.
//   linknet         7x7/2 stem + 2x2 pool, backbone encoder, decoder blocks
//                   joined to the encoder by addition.
//   fpn             backbone bottom-up, nearest-neighbour top-down with 1x1
//                   laterals, per-level heads summed at 1/4 resolution.

#ifndef MFSEG_ARCHZOO_HPP_
#define MFSEG_ARCHZOO_HPP_

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mfseg/layers.hpp"

namespace mfseg {

enum class Family { kUnet, kUnetpp, kResunet, kResunetpp, kAttentionUnet, kFpn, kLinknet };
enum class Backbone { kNone, kResnet18, kInceptionV3 };
enum class Mode { kTrain, kEval };

std::string to_string(Family family);
std::string to_string(Backbone backbone);
Family parse_family(const std::string& text);
Backbone parse_backbone(const std::string& text);

class ModelSpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ModelSpec {
  Family family = Family::kUnet;
  Backbone backbone = Backbone::kNone;
  int depth = 4;
  int base_width = 64;
  int in_channels = 1;
  // Empty (no dropout) or depth + 1 rates, one per encoder stage plus the
  // bottleneck; decoder stages reuse the rate of their encoder level.
  std::vector<double> dropout_schedule;
  bool deep_supervision = false;
  // unetpp with deep supervision: 0 averages all heads at inference,
  // 1..depth keeps only that head and skips the columns it does not need.
  int prune_level = 0;
  std::uint64_t seed = 0;

  void validate() const;

  // depth 4, width 64, dropout 0.1 -> 0.3.
  static ModelSpec canonical_unet();
};

// Rates 0.1 -> 0.3 in three steps over the depth + 1 stages; depth 4 gives
// [0.1, 0.1, 0.2, 0.2, 0.3].
std::vector<double> default_dropout_schedule(int depth);

// Table label, e.g. "U-Net", "FPN ResNet18".
std::string display_name(const ModelSpec& spec);

void to_json(nlohmann::json& j, const ModelSpec& spec);
void from_json(const nlohmann::json& j, ModelSpec& spec);

template <typename Scalar>
class Network;

/// A built network with its parameters. Move-only.
template <typename Scalar>
class Model {
 public:
  explicit Model(const ModelSpec& spec);
  Model(Model&&) noexcept;
  Model& operator=(Model&&) noexcept;
  ~Model();

  const ModelSpec& spec() const { return spec_; }
  ParameterStore<Scalar>& parameters() { return *store_; }
  const ParameterStore<Scalar>& parameters() const { return *store_; }

  Mode mode() const { return mode_; }
  void set_mode(Mode mode) { mode_ = mode; }

  // H and W must be multiples of this.
  Index input_divisor() const;

  // Raw sigmoid heads. Training with deep supervision yields one head per
  // nested level; otherwise the heads that make up the inference output.
  std::vector<Var<Scalar>> forward_heads(const Var<Scalar>& input,
                                         ForwardContext<Scalar>& ctx);

  // Probability map [N, 1, H, W] in the current mode. Multiple heads are
  // averaged. Train-mode dropout draws from `rng`, or from the model's own
  // seeded stream when null.
  Tensor<Scalar> predict(const Tensor<Scalar>& batch, Rng* rng = nullptr,
                         std::vector<Tensor<Scalar>>* attention_maps = nullptr);

  void check_input(const Shape& shape) const;

 private:
  ModelSpec spec_;
  std::unique_ptr<ParameterStore<Scalar>> store_;
  std::unique_ptr<Network<Scalar>> net_;
  Mode mode_ = Mode::kEval;
  Rng dropout_rng_;
};

template <typename Scalar = float>
Model<Scalar> build_model(const ModelSpec& spec) {
  return Model<Scalar>(spec);
}

// Eval/train behaviour follows model.mode().
template <typename Scalar>
Tensor<Scalar> forward(Model<Scalar>& model, const Tensor<Scalar>& batch) {
  return model.predict(batch);
}

template <typename Scalar>
Index count_parameters(const Model<Scalar>& model) {
  return model.parameters().count();
}

}  // namespace mfseg

#endif  // MFSEG_ARCHZOO_HPP_
