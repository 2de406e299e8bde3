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

// Reusable network blocks. Channel ratios used by the composite blocks are
// fixed here:
//   squeeze-excitation hidden width   max(1, C / 8)
//   atrous pyramid dilation rates     1, 2, 3
//   attention gate intermediate width max(1, C_skip / 2)
//   inception branch widths           C/4 each, remainder to the pool branch
//   link decoder bottleneck width     max(1, C_in / 4)

#ifndef MFSEG_BLOCKS_HPP_
#define MFSEG_BLOCKS_HPP_

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mfseg/layers.hpp"

namespace mfseg {

template <typename Scalar>
class ConvBnRelu {
 public:
  ConvBnRelu() = default;
  ConvBnRelu(BuildContext<Scalar>& ctx, const std::string& name, Index in,
             Index out, Index kernel, Index stride = 1, Index dilation = 1)
      : conv_(ctx, ctx.join(name, "conv"), in, out, kernel,
              {stride, dilation * (kernel - 1) / 2, dilation}, false),
        bn_(ctx, ctx.join(name, "bn"), out) {}

  Var<Scalar> operator()(const Var<Scalar>& x,
                         ForwardContext<Scalar>& fc) const {
    return ops::relu(bn_(conv_(x), fc));
  }

 private:
  Conv2d<Scalar> conv_;
  BatchNorm2d<Scalar> bn_;
};

/// conv3x3 -> ReLU -> dropout -> conv3x3 -> ReLU, no normalization.
template <typename Scalar>
class DoubleConv {
 public:
  DoubleConv() = default;
  DoubleConv(BuildContext<Scalar>& ctx, const std::string& name, Index in,
             Index out, double dropout)
      : conv1_(Conv2d<Scalar>::same(ctx, ctx.join(name, "conv1"), in, out, 3)),
        conv2_(Conv2d<Scalar>::same(ctx, ctx.join(name, "conv2"), out, out, 3)),
        dropout_(dropout) {}

  Var<Scalar> operator()(const Var<Scalar>& x,
                         ForwardContext<Scalar>& fc) const {
    auto y = fc.dropout(ops::relu(conv1_(x)), dropout_);
    return ops::relu(conv2_(y));
  }

 private:
  Conv2d<Scalar> conv1_;
  Conv2d<Scalar> conv2_;
  double dropout_ = 0.0;
};

/// Pre-activation residual unit:
///   y = conv(ReLU(BN(conv(ReLU(BN(x)))))) + shortcut(x)
/// The shortcut is the identity when in == out, else a 1x1 projection.
/// With every weight zeroed the unit is exactly the identity map.
template <typename Scalar>
class ResidualBlock {
 public:
  ResidualBlock() = default;
  ResidualBlock(BuildContext<Scalar>& ctx, const std::string& name, Index in,
                Index out, double dropout)
      : bn1_(ctx, ctx.join(name, "bn1"), in),
        conv1_(Conv2d<Scalar>::same(ctx, ctx.join(name, "conv1"), in, out, 3)),
        bn2_(ctx, ctx.join(name, "bn2"), out),
        conv2_(Conv2d<Scalar>::same(ctx, ctx.join(name, "conv2"), out, out, 3)),
        dropout_(dropout) {
    if (in != out) {
      projection_ = Conv2d<Scalar>(ctx, ctx.join(name, "proj"), in, out, 1);
    }
  }

  Var<Scalar> operator()(const Var<Scalar>& x,
                         ForwardContext<Scalar>& fc) const {
    auto y = conv1_(ops::relu(bn1_(x, fc)));
    y = fc.dropout(y, dropout_);
    y = conv2_(ops::relu(bn2_(y, fc)));
    return ops::add(y, projection_ ? (*projection_)(x) : x);
  }

 private:
  BatchNorm2d<Scalar> bn1_;
  Conv2d<Scalar> conv1_;
  BatchNorm2d<Scalar> bn2_;
  Conv2d<Scalar> conv2_;
  std::optional<Conv2d<Scalar>> projection_;
  double dropout_ = 0.0;
};

template <typename Scalar>
class SqueezeExcite {
 public:
  static constexpr Index kReduction = 8;

  SqueezeExcite() = default;
  SqueezeExcite(BuildContext<Scalar>& ctx, const std::string& name,
                Index channels)
      : reduce_(ctx, ctx.join(name, "reduce"), channels,
                std::max<Index>(1, channels / kReduction), 1),
        expand_(ctx, ctx.join(name, "expand"),
                std::max<Index>(1, channels / kReduction), channels, 1) {}

  Var<Scalar> operator()(const Var<Scalar>& x) const {
    auto s = ops::global_avg_pool(x);
    s = ops::sigmoid(expand_(ops::relu(reduce_(s))));
    return ops::scale_channels(x, s);
  }

 private:
  Conv2d<Scalar> reduce_;
  Conv2d<Scalar> expand_;
};

/// Parallel dilated 3x3 branches, concatenated and fused by a 1x1 conv.
template <typename Scalar>
class AtrousPyramid {
 public:
  static constexpr std::array<Index, 3> kRates{1, 2, 3};

  AtrousPyramid() = default;
  AtrousPyramid(BuildContext<Scalar>& ctx, const std::string& name, Index in,
                Index out) {
    for (std::size_t i = 0; i < kRates.size(); ++i) {
      branches_.emplace_back(ctx, ctx.join(name, "rate" + std::to_string(kRates[i])),
                             in, out, 3, 1, kRates[i]);
    }
    fuse_ = ConvBnRelu<Scalar>(ctx, ctx.join(name, "fuse"),
                               out * static_cast<Index>(kRates.size()), out, 1);
  }

  Var<Scalar> operator()(const Var<Scalar>& x,
                         ForwardContext<Scalar>& fc) const {
    std::vector<Var<Scalar>> parts;
    for (const auto& b : branches_) parts.push_back(b(x, fc));
    return fuse_(ops::concat(parts), fc);
  }

 private:
  std::vector<ConvBnRelu<Scalar>> branches_;
  ConvBnRelu<Scalar> fuse_;
};

/// Additive soft attention on a skip tensor x [N, Cx, H, W] driven by a
/// gating tensor g [N, Cg, H/2, W/2]:
///   alpha = up2(sigmoid(psi(ReLU(theta(x) + phi(g)))))
/// with theta a 2x2 stride-2 conv. Returns x * alpha.
template <typename Scalar>
class AttentionGate {
 public:
  AttentionGate() = default;
  AttentionGate(BuildContext<Scalar>& ctx, const std::string& name,
                Index skip_channels, Index gate_channels) {
    const Index inter = std::max<Index>(1, skip_channels / 2);
    theta_ = Conv2d<Scalar>(ctx, ctx.join(name, "theta"), skip_channels, inter,
                            2, {2, 0, 1}, false);
    phi_ = Conv2d<Scalar>(ctx, ctx.join(name, "phi"), gate_channels, inter, 1);
    psi_ = Conv2d<Scalar>(ctx, ctx.join(name, "psi"), inter, 1, 1);
  }

  Var<Scalar> operator()(const Var<Scalar>& x, const Var<Scalar>& g,
                         ForwardContext<Scalar>& fc) const {
    auto f = ops::relu(ops::add(theta_(x), phi_(g)));
    auto alpha = ops::upsample_nearest(ops::sigmoid(psi_(f)), 2);
    if (fc.attention_maps) fc.attention_maps->push_back(alpha->value);
    return ops::scale_spatial(x, alpha);
  }

 private:
  Conv2d<Scalar> theta_;
  Conv2d<Scalar> phi_;
  Conv2d<Scalar> psi_;
};

/// ResNet basic block (post-activation, as in ResNet-18).
template <typename Scalar>
class BasicBlock {
 public:
  BasicBlock() = default;
  BasicBlock(BuildContext<Scalar>& ctx, const std::string& name, Index in,
             Index out, Index stride)
      : conv1_(ctx, ctx.join(name, "conv1"), in, out, 3, {stride, 1, 1}, false),
        bn1_(ctx, ctx.join(name, "bn1"), out),
        conv2_(Conv2d<Scalar>::same(ctx, ctx.join(name, "conv2"), out, out, 3, 1,
                                    false)),
        bn2_(ctx, ctx.join(name, "bn2"), out) {
    if (stride != 1 || in != out) {
      down_conv_ = Conv2d<Scalar>(ctx, ctx.join(name, "down.conv"), in, out, 1,
                                  {stride, 0, 1}, false);
      down_bn_ = BatchNorm2d<Scalar>(ctx, ctx.join(name, "down.bn"), out);
    }
  }

  Var<Scalar> operator()(const Var<Scalar>& x,
                         ForwardContext<Scalar>& fc) const {
    auto y = ops::relu(bn1_(conv1_(x), fc));
    y = bn2_(conv2_(y), fc);
    auto shortcut = down_conv_ ? (*down_bn_)((*down_conv_)(x), fc) : x;
    return ops::relu(ops::add(y, shortcut));
  }

 private:
  Conv2d<Scalar> conv1_;
  BatchNorm2d<Scalar> bn1_;
  Conv2d<Scalar> conv2_;
  BatchNorm2d<Scalar> bn2_;
  std::optional<Conv2d<Scalar>> down_conv_;
  std::optional<BatchNorm2d<Scalar>> down_bn_;
};

/// Inception-style mixing block: 1x1 | 1x1-3x3 | 1x1-3x3-3x3 | pool-1x1.
template <typename Scalar>
class InceptionBlock {
 public:
  InceptionBlock() = default;
  InceptionBlock(BuildContext<Scalar>& ctx, const std::string& name, Index in,
                 Index out) {
    const Index q = std::max<Index>(1, out / 4);
    const Index pool_width = std::max<Index>(1, out - 3 * q);
    b1_ = ConvBnRelu<Scalar>(ctx, ctx.join(name, "b1"), in, q, 1);
    b2a_ = ConvBnRelu<Scalar>(ctx, ctx.join(name, "b2a"), in, q, 1);
    b2b_ = ConvBnRelu<Scalar>(ctx, ctx.join(name, "b2b"), q, q, 3);
    b3a_ = ConvBnRelu<Scalar>(ctx, ctx.join(name, "b3a"), in, q, 1);
    b3b_ = ConvBnRelu<Scalar>(ctx, ctx.join(name, "b3b"), q, q, 3);
    b3c_ = ConvBnRelu<Scalar>(ctx, ctx.join(name, "b3c"), q, q, 3);
    b4_ = ConvBnRelu<Scalar>(ctx, ctx.join(name, "b4"), in, pool_width, 1);
  }

  Var<Scalar> operator()(const Var<Scalar>& x,
                         ForwardContext<Scalar>& fc) const {
    return ops::concat<Scalar>({
        b1_(x, fc),
        b2b_(b2a_(x, fc), fc),
        b3c_(b3b_(b3a_(x, fc), fc), fc),
        b4_(ops::max_pool2d(x, 3, 1, 1), fc),
    });
  }

 private:
  ConvBnRelu<Scalar> b1_, b2a_, b2b_, b3a_, b3b_, b3c_, b4_;
};

/// Halves resolution: strided 3x3 conv branch next to a pooled 1x1 branch.
template <typename Scalar>
class ReductionBlock {
 public:
  ReductionBlock() = default;
  ReductionBlock(BuildContext<Scalar>& ctx, const std::string& name, Index in,
                 Index out) {
    const Index a = std::max<Index>(1, out / 2);
    conv_ = ConvBnRelu<Scalar>(ctx, ctx.join(name, "conv"), in, a, 3, 2);
    pool_proj_ = ConvBnRelu<Scalar>(ctx, ctx.join(name, "pool_proj"), in,
                                    std::max<Index>(1, out - a), 1);
  }

  Var<Scalar> operator()(const Var<Scalar>& x,
                         ForwardContext<Scalar>& fc) const {
    return ops::concat<Scalar>(
        {conv_(x, fc), pool_proj_(ops::max_pool2d(x, 2, 2), fc)});
  }

 private:
  ConvBnRelu<Scalar> conv_;
  ConvBnRelu<Scalar> pool_proj_;
};

/// LinkNet decoder: 1x1 reduce, 4x4/2 transposed conv, 1x1 expand.
template <typename Scalar>
class LinkDecoderBlock {
 public:
  LinkDecoderBlock() = default;
  LinkDecoderBlock(BuildContext<Scalar>& ctx, const std::string& name, Index in,
                   Index out) {
    const Index mid = std::max<Index>(1, in / 4);
    reduce_ = ConvBnRelu<Scalar>(ctx, ctx.join(name, "reduce"), in, mid, 1);
    up_ = ConvTranspose2d<Scalar>::up2(ctx, ctx.join(name, "up"), mid, mid);
    up_bn_ = BatchNorm2d<Scalar>(ctx, ctx.join(name, "up_bn"), mid);
    expand_ = ConvBnRelu<Scalar>(ctx, ctx.join(name, "expand"), mid, out, 1);
  }

  Var<Scalar> operator()(const Var<Scalar>& x,
                         ForwardContext<Scalar>& fc) const {
    auto y = reduce_(x, fc);
    y = ops::relu(up_bn_(up_(y), fc));
    return expand_(y, fc);
  }

 private:
  ConvBnRelu<Scalar> reduce_;
  ConvTranspose2d<Scalar> up_;
  BatchNorm2d<Scalar> up_bn_;
  ConvBnRelu<Scalar> expand_;
};

}  // namespace mfseg

#endif  // MFSEG_BLOCKS_HPP_
