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

// Differentiable tensor operations. All functions are explicitly
// instantiated for float and double in ops.cpp.

#ifndef MFSEG_OPS_HPP_
#define MFSEG_OPS_HPP_

#include <vector>

#include "mfseg/autograd.hpp"
#include "mfseg/random.hpp"

namespace mfseg::ops {

struct ConvOptions {
  Index stride = 1;
  Index padding = 0;
  Index dilation = 1;
};

// weight: [out, in, kh, kw]; bias: [1, out, 1, 1] or null.
template <typename Scalar>
Var<Scalar> conv2d(const Var<Scalar>& x, const Var<Scalar>& weight,
                   const Var<Scalar>& bias, ConvOptions options = {});

// weight: [in, out, kh, kw]; output size (H - 1) * stride - 2 * padding + kh.
template <typename Scalar>
Var<Scalar> conv_transpose2d(const Var<Scalar>& x, const Var<Scalar>& weight,
                             const Var<Scalar>& bias, Index stride,
                             Index padding);

template <typename Scalar>
Var<Scalar> max_pool2d(const Var<Scalar>& x, Index kernel, Index stride,
                       Index padding = 0);

// Mean over H and W; output [N, C, 1, 1].
template <typename Scalar>
Var<Scalar> global_avg_pool(const Var<Scalar>& x);

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& x);

template <typename Scalar>
Var<Scalar> sigmoid(const Var<Scalar>& x);

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b);

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& x, Scalar factor);

// Averages same-shaped inputs.
template <typename Scalar>
Var<Scalar> mean(const std::vector<Var<Scalar>>& xs);

// x: [N, C, H, W] times s: [N, C, 1, 1].
template <typename Scalar>
Var<Scalar> scale_channels(const Var<Scalar>& x, const Var<Scalar>& s);

// x: [N, C, H, W] times a: [N, 1, H, W].
template <typename Scalar>
Var<Scalar> scale_spatial(const Var<Scalar>& x, const Var<Scalar>& a);

// Channel concatenation.
template <typename Scalar>
Var<Scalar> concat(const std::vector<Var<Scalar>>& xs);

template <typename Scalar>
Var<Scalar> upsample_nearest(const Var<Scalar>& x, Index factor);

// Batch normalization over (N, H, W). In training mode batch statistics are
// used and the running estimates are updated in place.
template <typename Scalar>
Var<Scalar> batch_norm(const Var<Scalar>& x, const Var<Scalar>& gamma,
                       const Var<Scalar>& beta, Tensor<Scalar>& running_mean,
                       Tensor<Scalar>& running_var, bool training,
                       Scalar momentum = Scalar(0.1), Scalar eps = Scalar(1e-5));

// Inverted dropout; identity when rate == 0.
template <typename Scalar>
Var<Scalar> dropout(const Var<Scalar>& x, double rate, Rng& rng);

}  // namespace mfseg::ops

#endif  // MFSEG_OPS_HPP_
