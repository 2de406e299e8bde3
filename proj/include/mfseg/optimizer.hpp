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

#ifndef MFSEG_OPTIMIZER_HPP_
#define MFSEG_OPTIMIZER_HPP_

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mfseg/autograd.hpp"

namespace mfseg {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments:
///   m = b1 m + (1 - b1) g,  v = b2 v + (1 - b2) g^2
///   x -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
template <typename Scalar>
class Adam {
 public:
  Adam(std::vector<Var<Scalar>> params, AdamOptions options)
      : params_(std::move(params)), options_(options) {
    if (!(options_.learning_rate >= 0.0)) {
      throw std::invalid_argument("learning rate must be >= 0");
    }
    for (const auto& p : params_) {
      m_.push_back(Tensor<Scalar>::Zero(p->shape()));
      v_.push_back(Tensor<Scalar>::Zero(p->shape()));
    }
  }

  // Parameters without a gradient buffer are treated as having zero gradient.
  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
    const auto b1 = static_cast<Scalar>(options_.beta1);
    const auto b2 = static_cast<Scalar>(options_.beta2);
    const auto lr = static_cast<Scalar>(options_.learning_rate);
    const auto eps = static_cast<Scalar>(options_.epsilon);
    const auto inv_c1 = static_cast<Scalar>(1.0 / c1);
    const auto inv_c2 = static_cast<Scalar>(1.0 / c2);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = *params_[i];
      auto& m = m_[i].array();
      auto& v = v_[i].array();
      if (p.grad.empty()) {
        m *= b1;
        v *= b2;
      } else {
        const auto& g = p.grad.array();
        m = b1 * m + (Scalar(1) - b1) * g;
        v = b2 * v + (Scalar(1) - b2) * g.square();
      }
      if (lr != Scalar(0)) {
        p.value.array() -= lr * (m * inv_c1) / ((v * inv_c2).sqrt() + eps);
      }
    }
  }

  std::int64_t steps() const { return t_; }
  const AdamOptions& options() const { return options_; }

 private:
  std::vector<Var<Scalar>> params_;
  AdamOptions options_;
  std::vector<Tensor<Scalar>> m_;
  std::vector<Tensor<Scalar>> v_;
  std::int64_t t_ = 0;
};

}  // namespace mfseg

#endif  // MFSEG_OPTIMIZER_HPP_
