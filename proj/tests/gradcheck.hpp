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

// Central finite-difference checks for autograd ops, in double precision.

#ifndef MFSEG_TESTS_GRADCHECK_HPP_
#define MFSEG_TESTS_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "mfseg/autograd.hpp"
#include "mfseg/random.hpp"

namespace mfseg::testing {

inline Tensor<double> random_tensor(const Shape& shape, Rng& rng, double scale = 1.0) {
  Tensor<double> t(shape);
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = scale * rng.normal();
  return t;
}

template <typename S>
bool identical(const Tensor<S>& a, const Tensor<S>& b) {
  return a.shape() == b.shape() && (a.array() == b.array()).all();
}

struct GradCheck {
  double worst = 0.0;  // max |analytic - numeric| / (1 + |numeric|)
  bool ok(double tol = 1e-6) const { return worst <= tol; }
};

// f maps the inputs to one output; the scalar objective is sum(w * f) with
// fixed random weights w.
inline GradCheck check_gradients(
    const std::function<Var<double>(const std::vector<Var<double>>&)>& f,
    std::vector<Var<double>> inputs, std::uint64_t seed = 1, double h = 1e-6) {
  Rng rng(seed);
  auto out = f(inputs);
  const Tensor<double> w = random_tensor(out->shape(), rng);
  backward(out, w);
  auto objective = [&] { return (f(inputs)->value.array() * w.array()).sum(); };
  GradCheck result;
  for (auto& in : inputs) {
    if (!in->requires_grad) continue;
    const Tensor<double> analytic =
        in->grad.empty() ? Tensor<double>::Zero(in->shape()) : in->grad;
    for (Index i = 0; i < in->value.size(); ++i) {
      const double saved = in->value.data()[i];
      in->value.data()[i] = saved + h;
      const double up = objective();
      in->value.data()[i] = saved - h;
      const double down = objective();
      in->value.data()[i] = saved;
      const double numeric = (up - down) / (2 * h);
      result.worst = std::max(result.worst, std::abs(analytic.data()[i] - numeric) /
                                                (1.0 + std::abs(numeric)));
    }
  }
  return result;
}

}  // namespace mfseg::testing

#endif  // MFSEG_TESTS_GRADCHECK_HPP_
