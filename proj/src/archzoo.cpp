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

#include "mfseg/archzoo.hpp"

#include <variant>

#include "mfseg/blocks.hpp"

namespace mfseg {

std::string to_string(Family family) {
  switch (family) {
    case Family::kUnet: return "unet";
    case Family::kUnetpp: return "unetpp";
    case Family::kResunet: return "resunet";
    case Family::kResunetpp: return "resunetpp";
    case Family::kAttentionUnet: return "attention_unet";
    case Family::kFpn: return "fpn";
    case Family::kLinknet: return "linknet";
  }
  return "?";
}

std::string to_string(Backbone backbone) {
  switch (backbone) {
    case Backbone::kNone: return "none";
    case Backbone::kResnet18: return "resnet18";
    case Backbone::kInceptionV3: return "inceptionv3";
  }
  return "?";
}

Family parse_family(const std::string& text) {
  for (Family f : {Family::kUnet, Family::kUnetpp, Family::kResunet,
                   Family::kResunetpp, Family::kAttentionUnet, Family::kFpn,
                   Family::kLinknet}) {
    if (to_string(f) == text) return f;
  }
  throw ModelSpecError("unknown architecture '" + text + "'");
}

Backbone parse_backbone(const std::string& text) {
  for (Backbone b : {Backbone::kNone, Backbone::kResnet18, Backbone::kInceptionV3}) {
    if (to_string(b) == text) return b;
  }
  throw ModelSpecError("unknown backbone '" + text + "'");
}

namespace {

bool uses_backbone(Family f) { return f == Family::kFpn || f == Family::kLinknet; }

}  // namespace

void ModelSpec::validate() const {
  if (depth < 1) throw ModelSpecError("depth must be >= 1");
  if (base_width < 1) throw ModelSpecError("base_width must be >= 1");
  if (in_channels < 1) throw ModelSpecError("in_channels must be >= 1");
  for (double r : dropout_schedule) {
    if (!(r >= 0.0 && r < 1.0)) {
      throw ModelSpecError("dropout rates must lie in [0, 1)");
    }
  }
  if (!dropout_schedule.empty() &&
      dropout_schedule.size() != static_cast<std::size_t>(depth) + 1) {
    throw ModelSpecError("dropout_schedule has " +
                         std::to_string(dropout_schedule.size()) +
                         " rates; depth " + std::to_string(depth) + " needs " +
                         std::to_string(depth + 1));
  }
  if (uses_backbone(family)) {
    if (backbone == Backbone::kNone) {
      throw ModelSpecError(to_string(family) + " requires a backbone");
    }
    if (backbone == Backbone::kInceptionV3 && base_width < 4) {
      throw ModelSpecError("inceptionv3 backbone needs base_width >= 4");
    }
  } else if (backbone != Backbone::kNone) {
    throw ModelSpecError("backbone " + to_string(backbone) +
                         " is not valid for " + to_string(family));
  }
  if (deep_supervision && family != Family::kUnetpp) {
    throw ModelSpecError("deep supervision is only available for unetpp");
  }
  if (prune_level < 0 || prune_level > depth) {
    throw ModelSpecError("prune_level must be in [0, depth]");
  }
  if (prune_level != 0 && !deep_supervision) {
    throw ModelSpecError("prune_level requires deep supervision");
  }
}

ModelSpec ModelSpec::canonical_unet() {
  ModelSpec spec;
  spec.dropout_schedule = default_dropout_schedule(spec.depth);
  return spec;
}

std::vector<double> default_dropout_schedule(int depth) {
  if (depth < 1) throw ModelSpecError("depth must be >= 1");
  std::vector<double> rates;
  for (int i = 0; i <= depth; ++i) rates.push_back((1 + (2 * i) / depth) / 10.0);
  return rates;
}

std::string display_name(const ModelSpec& spec) {
  switch (spec.family) {
    case Family::kUnet: return "U-Net";
    case Family::kUnetpp: return "U-Net++";
    case Family::kResunet: return "ResU-Net";
    case Family::kResunetpp: return "ResU-Net++";
    case Family::kAttentionUnet: return "U-Net Attention";
    case Family::kFpn:
      return spec.backbone == Backbone::kInceptionV3 ? "FPN InceptionV3" : "FPN ResNet18";
    case Family::kLinknet:
      return spec.backbone == Backbone::kInceptionV3 ? "LinkNet InceptionV3"
                                                     : "LinkNet ResNet18";
  }
  return "?";
}

void to_json(nlohmann::json& j, const ModelSpec& spec) {
  j = nlohmann::json{{"family", to_string(spec.family)},
                     {"backbone", to_string(spec.backbone)},
                     {"depth", spec.depth},
                     {"base_width", spec.base_width},
                     {"in_channels", spec.in_channels},
                     {"dropout_schedule", spec.dropout_schedule},
                     {"deep_supervision", spec.deep_supervision},
                     {"prune_level", spec.prune_level},
                     {"seed", spec.seed}};
}

void from_json(const nlohmann::json& j, ModelSpec& spec) {
  spec.family = parse_family(j.at("family").get<std::string>());
  spec.backbone = parse_backbone(j.value("backbone", std::string("none")));
  spec.depth = j.at("depth").get<int>();
  spec.base_width = j.at("base_width").get<int>();
  spec.in_channels = j.value("in_channels", 1);
  spec.dropout_schedule = j.value("dropout_schedule", std::vector<double>{});
  spec.deep_supervision = j.value("deep_supervision", false);
  spec.prune_level = j.value("prune_level", 0);
  spec.seed = j.value("seed", std::uint64_t{0});
}

// ---------------------------------------------------------------------------
// Networks

template <typename Scalar>
class Network {
 public:
  virtual ~Network() = default;
  virtual std::vector<Var<Scalar>> forward(const Var<Scalar>& x,
                                           ForwardContext<Scalar>& fc) = 0;
  virtual Index input_divisor() const = 0;
};

namespace {

Index stage_width(const ModelSpec& spec, int level) {
  return static_cast<Index>(spec.base_width) << level;
}

double stage_dropout(const ModelSpec& spec, int level) {
  if (spec.dropout_schedule.empty()) return 0.0;
  return spec.dropout_schedule[static_cast<std::size_t>(level)];
}

template <typename Scalar>
class SigmoidHead {
 public:
  SigmoidHead() = default;
  SigmoidHead(BuildContext<Scalar>& ctx, const std::string& name, Index in)
      : conv_(ctx, name, in, 1, 1) {}
  Var<Scalar> operator()(const Var<Scalar>& x) const {
    return ops::sigmoid(conv_(x));
  }

 private:
  Conv2d<Scalar> conv_;
};

// One stage block of the unet-style families.
template <typename Scalar>
class StageBlock {
 public:
  StageBlock(BuildContext<Scalar>& ctx, const std::string& name, Index in,
             Index out, double dropout, bool residual) {
    if (residual) {
      block_ = ResidualBlock<Scalar>(ctx, name, in, out, dropout);
    } else {
      block_ = DoubleConv<Scalar>(ctx, name, in, out, dropout);
    }
  }
  Var<Scalar> operator()(const Var<Scalar>& x,
                         ForwardContext<Scalar>& fc) const {
    return std::visit([&](const auto& b) { return b(x, fc); }, block_);
  }

 private:
  std::variant<DoubleConv<Scalar>, ResidualBlock<Scalar>> block_;
};

// unet, resunet, resunetpp and attention_unet share this topology.
template <typename Scalar>
class EncoderDecoder final : public Network<Scalar> {
 public:
  EncoderDecoder(const ModelSpec& spec, BuildContext<Scalar>& ctx)
      : depth_(spec.depth) {
    const bool residual = spec.family == Family::kResunet ||
                          spec.family == Family::kResunetpp;
    const bool squeeze = spec.family == Family::kResunetpp;
    const bool attention = spec.family == Family::kAttentionUnet;

    Index in = spec.in_channels;
    for (int i = 0; i < depth_; ++i) {
      const std::string name = "enc" + std::to_string(i);
      encoder_.emplace_back(ctx, name, in, stage_width(spec, i),
                            stage_dropout(spec, i), residual);
      if (squeeze) {
        squeeze_.emplace_back(ctx, name + ".se", stage_width(spec, i));
      }
      in = stage_width(spec, i);
    }
    bridge_.emplace_back(ctx, "bridge", in, stage_width(spec, depth_),
                         stage_dropout(spec, depth_), residual);
    if (squeeze) {
      pyramid_ = AtrousPyramid<Scalar>(ctx, "bridge.aspp", stage_width(spec, depth_),
                                       stage_width(spec, depth_));
    }
    for (int i = depth_ - 1; i >= 0; --i) {
      const std::string name = "dec" + std::to_string(i);
      const Index w = stage_width(spec, i);
      const Index below = stage_width(spec, i + 1);
      if (attention) gates_.emplace_back(ctx, name + ".gate", w, below);
      up_.push_back(ConvTranspose2d<Scalar>::up2(ctx, name + ".up", below, w));
      decoder_.emplace_back(ctx, name, 2 * w, w, stage_dropout(spec, i), residual);
    }
    head_ = SigmoidHead<Scalar>(ctx, "head", stage_width(spec, 0));
  }

  std::vector<Var<Scalar>> forward(const Var<Scalar>& x,
                                   ForwardContext<Scalar>& fc) override {
    std::vector<Var<Scalar>> skips;
    Var<Scalar> y = x;
    for (int i = 0; i < depth_; ++i) {
      y = encoder_[i](y, fc);
      if (!squeeze_.empty()) y = squeeze_[i](y);
      skips.push_back(y);
      y = ops::max_pool2d(y, 2, 2);
    }
    y = bridge_.front()(y, fc);
    if (pyramid_) y = (*pyramid_)(y, fc);
    for (int k = 0; k < depth_; ++k) {
      const int level = depth_ - 1 - k;
      Var<Scalar> skip = skips[level];
      if (!gates_.empty()) skip = gates_[k](skip, y, fc);
      y = decoder_[k](ops::concat<Scalar>({skip, up_[k](y)}), fc);
    }
    return {head_(y)};
  }

  Index input_divisor() const override { return Index{1} << depth_; }

 private:
  int depth_;
  std::vector<StageBlock<Scalar>> encoder_;
  std::vector<SqueezeExcite<Scalar>> squeeze_;
  std::vector<StageBlock<Scalar>> bridge_;
  std::optional<AtrousPyramid<Scalar>> pyramid_;
  std::vector<AttentionGate<Scalar>> gates_;
  std::vector<ConvTranspose2d<Scalar>> up_;
  std::vector<StageBlock<Scalar>> decoder_;
  SigmoidHead<Scalar> head_;
};

// Nested U-Net. Node (i, j) sits at resolution level i, column j.
template <typename Scalar>
class NestedUNet final : public Network<Scalar> {
 public:
  NestedUNet(const ModelSpec& spec, BuildContext<Scalar>& ctx)
      : depth_(spec.depth),
        deep_supervision_(spec.deep_supervision),
        prune_level_(spec.prune_level) {
    nodes_.resize(static_cast<std::size_t>(depth_ + 1));
    up_.resize(static_cast<std::size_t>(depth_ + 1));
    for (int i = 0; i <= depth_; ++i) {
      const Index w = stage_width(spec, i);
      const Index in = i == 0 ? spec.in_channels : stage_width(spec, i - 1);
      nodes_[i].emplace_back(ctx, node_name(i, 0), in, w, 0.0, false);
      dropout_.push_back(stage_dropout(spec, i));
      for (int j = 1; i + j <= depth_; ++j) {
        up_[i].push_back(ConvTranspose2d<Scalar>::up2(
            ctx, node_name(i, j) + ".up", stage_width(spec, i + 1), w));
        nodes_[i].emplace_back(ctx, node_name(i, j), (j + 1) * w, w,
                               stage_dropout(spec, i), false);
      }
    }
    for (int j = 1; j <= depth_; ++j) {
      if (deep_supervision_ || j == depth_) {
        heads_.emplace_back(ctx, "head" + std::to_string(j), stage_width(spec, 0));
      }
    }
  }

  std::vector<Var<Scalar>> forward(const Var<Scalar>& x,
                                   ForwardContext<Scalar>& fc) override {
    // Columns needed: all for training or averaged inference, 1..L when
    // pruned to head L.
    int columns = depth_;
    if (deep_supervision_ && !fc.training && prune_level_ > 0) {
      columns = prune_level_;
    }
    std::vector<std::vector<Var<Scalar>>> grid(static_cast<std::size_t>(depth_ + 1));
    Var<Scalar> y = x;
    for (int i = 0; i <= depth_ && i <= columns; ++i) {
      if (i > 0) y = ops::max_pool2d(grid[i - 1][0], 2, 2);
      grid[i].push_back(fc.dropout(nodes_[i][0](y, fc), dropout_[i]));
    }
    for (int j = 1; j <= columns; ++j) {
      for (int i = 0; i + j <= columns; ++i) {
        std::vector<Var<Scalar>> parts(grid[i].begin(), grid[i].begin() + j);
        parts.push_back(up_[i][j - 1](grid[i + 1][j - 1]));
        grid[i].push_back(nodes_[i][j](ops::concat(parts), fc));
      }
    }
    std::vector<Var<Scalar>> outputs;
    if (!deep_supervision_) {
      outputs.push_back(heads_.back()(grid[0][depth_]));
    } else if (fc.training || prune_level_ == 0) {
      for (int j = 1; j <= depth_; ++j) outputs.push_back(heads_[j - 1](grid[0][j]));
    } else {
      outputs.push_back(heads_[prune_level_ - 1](grid[0][prune_level_]));
    }
    return outputs;
  }

  Index input_divisor() const override { return Index{1} << depth_; }

 private:
  static std::string node_name(int i, int j) {
    return "x" + std::to_string(i) + "_" + std::to_string(j);
  }

  int depth_;
  bool deep_supervision_;
  int prune_level_;
  std::vector<std::vector<StageBlock<Scalar>>> nodes_;
  std::vector<std::vector<ConvTranspose2d<Scalar>>> up_;
  std::vector<double> dropout_;
  std::vector<SigmoidHead<Scalar>> heads_;
};

// Stem (7x7/2 conv + 2x2/2 pool) followed by `depth` stages. Stage 1 keeps
// the 1/4 resolution, later stages halve it.
template <typename Scalar>
class BackboneEncoder {
 public:
  BackboneEncoder(const ModelSpec& spec, BuildContext<Scalar>& ctx)
      : depth_(spec.depth),
        stem_(ctx, "stem", spec.in_channels, spec.base_width, 7, 2) {
    for (int i = 0; i <= depth_; ++i) dropout_.push_back(stage_dropout(spec, i));
    Index in = spec.base_width;
    for (int s = 1; s <= depth_; ++s) {
      const Index out = stage_width(spec, s - 1);
      const Index stride = s == 1 ? 1 : 2;
      const std::string name = "layer" + std::to_string(s);
      Stage stage;
      if (spec.backbone == Backbone::kResnet18) {
        stage.residual = {BasicBlock<Scalar>(ctx, name + ".0", in, out, stride),
                          BasicBlock<Scalar>(ctx, name + ".1", out, out, 1)};
      } else {
        if (stride == 2) {
          stage.reduction = ReductionBlock<Scalar>(ctx, name + ".reduce", in, out);
        } else if (in != out) {
          stage.projection = ConvBnRelu<Scalar>(ctx, name + ".proj", in, out, 1);
        }
        stage.mixing = InceptionBlock<Scalar>(ctx, name + ".mixed", out, out);
      }
      stages_.push_back(std::move(stage));
      widths_.push_back(out);
      in = out;
    }
  }

  // Returns {stem output at 1/2, stage outputs at 1/4 ... 1/2^(depth+1)}.
  std::vector<Var<Scalar>> operator()(const Var<Scalar>& x,
                                      ForwardContext<Scalar>& fc) const {
    std::vector<Var<Scalar>> features;
    auto y = fc.dropout(stem_(x, fc), dropout_[0]);
    features.push_back(y);
    y = ops::max_pool2d(y, 2, 2);
    for (std::size_t s = 0; s < stages_.size(); ++s) {
      const Stage& stage = stages_[s];
      if (!stage.residual.empty()) {
        for (const auto& block : stage.residual) y = block(y, fc);
      } else {
        if (stage.reduction) y = (*stage.reduction)(y, fc);
        if (stage.projection) y = (*stage.projection)(y, fc);
        y = (*stage.mixing)(y, fc);
      }
      y = fc.dropout(y, dropout_[s + 1]);
      features.push_back(y);
    }
    return features;
  }

  Index stem_width() const { return widths_.empty() ? 0 : widths_.front(); }
  const std::vector<Index>& widths() const { return widths_; }
  Index divisor() const { return Index{1} << (depth_ + 1); }

 private:
  struct Stage {
    std::vector<BasicBlock<Scalar>> residual;
    std::optional<ReductionBlock<Scalar>> reduction;
    std::optional<ConvBnRelu<Scalar>> projection;
    std::optional<InceptionBlock<Scalar>> mixing;
  };

  int depth_;
  ConvBnRelu<Scalar> stem_;
  std::vector<Stage> stages_;
  std::vector<Index> widths_;
  std::vector<double> dropout_;
};

template <typename Scalar>
class LinkNet final : public Network<Scalar> {
 public:
  LinkNet(const ModelSpec& spec, BuildContext<Scalar>& ctx)
      : encoder_(spec, ctx) {
    const auto& widths = encoder_.widths();
    // Decoder k maps stage k+1 onto the next finer skip (stage k, or the stem).
    for (int s = spec.depth; s >= 1; --s) {
      const Index out = s >= 2 ? widths[s - 2] : spec.base_width;
      decoder_.emplace_back(ctx, "decoder" + std::to_string(s), widths[s - 1], out);
    }
    const Index w = spec.base_width;
    const Index half = std::max<Index>(1, w / 2);
    final_up_ = ConvTranspose2d<Scalar>::up2(ctx, "final.up", w, half);
    final_conv_ = Conv2d<Scalar>::same(ctx, "final.conv", half, half, 3);
    head_ = SigmoidHead<Scalar>(ctx, "head", half);
  }

  std::vector<Var<Scalar>> forward(const Var<Scalar>& x,
                                   ForwardContext<Scalar>& fc) override {
    auto features = encoder_(x, fc);
    Var<Scalar> y = features.back();
    for (std::size_t k = 0; k < decoder_.size(); ++k) {
      const std::size_t skip = features.size() - 2 - k;
      y = ops::add(decoder_[k](y, fc), features[skip]);
    }
    y = ops::relu(final_up_(y));
    y = ops::relu(final_conv_(y));
    return {head_(y)};
  }

  Index input_divisor() const override { return encoder_.divisor(); }

 private:
  BackboneEncoder<Scalar> encoder_;
  std::vector<LinkDecoderBlock<Scalar>> decoder_;
  ConvTranspose2d<Scalar> final_up_;
  Conv2d<Scalar> final_conv_;
  SigmoidHead<Scalar> head_;
};

template <typename Scalar>
class FeaturePyramid final : public Network<Scalar> {
 public:
  FeaturePyramid(const ModelSpec& spec, BuildContext<Scalar>& ctx)
      : encoder_(spec, ctx) {
    const Index pyramid = 2 * static_cast<Index>(spec.base_width);
    const Index segment = spec.base_width;
    const auto& widths = encoder_.widths();
    for (std::size_t s = 0; s < widths.size(); ++s) {
      const std::string level = std::to_string(s + 2);
      lateral_.emplace_back(ctx, "lateral" + level, widths[s], pyramid, 1);
      heads_.emplace_back(ctx, "seg" + level, pyramid, segment, 3);
    }
    head_ = SigmoidHead<Scalar>(ctx, "head", segment);
  }

  std::vector<Var<Scalar>> forward(const Var<Scalar>& x,
                                   ForwardContext<Scalar>& fc) override {
    auto features = encoder_(x, fc);
    const std::size_t levels = lateral_.size();
    // Top-down: P_s = lateral(C_s) + up2(P_{s+1}).
    std::vector<Var<Scalar>> pyramid(levels);
    for (std::size_t k = levels; k-- > 0;) {
      auto lateral = lateral_[k](features[k + 1]);
      pyramid[k] = k + 1 == levels
                       ? lateral
                       : ops::add(lateral, ops::upsample_nearest(pyramid[k + 1], 2));
    }
    Var<Scalar> merged;
    for (std::size_t k = 0; k < levels; ++k) {
      auto h = ops::upsample_nearest(heads_[k](pyramid[k], fc), Index{1} << k);
      merged = merged ? ops::add(merged, h) : h;
    }
    return {head_(ops::upsample_nearest(merged, 4))};
  }

  Index input_divisor() const override { return encoder_.divisor(); }

 private:
  BackboneEncoder<Scalar> encoder_;
  std::vector<Conv2d<Scalar>> lateral_;
  std::vector<ConvBnRelu<Scalar>> heads_;
  SigmoidHead<Scalar> head_;
};

template <typename Scalar>
std::unique_ptr<Network<Scalar>> make_network(const ModelSpec& spec,
                                              BuildContext<Scalar>& ctx) {
  switch (spec.family) {
    case Family::kUnet:
    case Family::kResunet:
    case Family::kResunetpp:
    case Family::kAttentionUnet:
      return std::make_unique<EncoderDecoder<Scalar>>(spec, ctx);
    case Family::kUnetpp:
      return std::make_unique<NestedUNet<Scalar>>(spec, ctx);
    case Family::kLinknet:
      return std::make_unique<LinkNet<Scalar>>(spec, ctx);
    case Family::kFpn:
      return std::make_unique<FeaturePyramid<Scalar>>(spec, ctx);
  }
  throw ModelSpecError("unhandled family");
}

}  // namespace

// ---------------------------------------------------------------------------
// Model

template <typename Scalar>
Model<Scalar>::Model(const ModelSpec& spec)
    : spec_(spec),
      store_(std::make_unique<ParameterStore<Scalar>>()),
      dropout_rng_(derive_seed(spec.seed, Stream::kDropout)) {
  spec_.validate();
  Rng init_rng(derive_seed(spec_.seed, Stream::kInit));
  BuildContext<Scalar> ctx{*store_, init_rng};
  net_ = make_network(spec_, ctx);
}

template <typename Scalar>
Model<Scalar>::Model(Model&&) noexcept = default;
template <typename Scalar>
Model<Scalar>& Model<Scalar>::operator=(Model&&) noexcept = default;
template <typename Scalar>
Model<Scalar>::~Model() = default;

template <typename Scalar>
Index Model<Scalar>::input_divisor() const {
  return net_->input_divisor();
}

template <typename Scalar>
void Model<Scalar>::check_input(const Shape& shape) const {
  if (shape.c != spec_.in_channels) {
    throw std::invalid_argument("model expects " +
                                std::to_string(spec_.in_channels) +
                                " input channel(s), got " + std::to_string(shape.c));
  }
  const Index d = input_divisor();
  if (shape.h <= 0 || shape.w <= 0 || shape.h % d != 0 || shape.w % d != 0) {
    throw std::invalid_argument("input " + std::to_string(shape.w) + "x" +
                                std::to_string(shape.h) +
                                " is not divisible by " + std::to_string(d));
  }
}

template <typename Scalar>
std::vector<Var<Scalar>> Model<Scalar>::forward_heads(const Var<Scalar>& input,
                                                      ForwardContext<Scalar>& ctx) {
  check_input(input->shape());
  return net_->forward(input, ctx);
}

template <typename Scalar>
Tensor<Scalar> Model<Scalar>::predict(const Tensor<Scalar>& batch, Rng* rng,
                                      std::vector<Tensor<Scalar>>* attention_maps) {
  ForwardContext<Scalar> ctx;
  ctx.training = mode_ == Mode::kTrain;
  ctx.rng = rng ? rng : &dropout_rng_;
  ctx.attention_maps = attention_maps;
  auto heads = forward_heads(constant(batch), ctx);
  if (heads.size() == 1) return heads.front()->value;
  return ops::mean(heads)->value;
}

template class Model<float>;
template class Model<double>;

}  // namespace mfseg
