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

#include <cmath>

#include "doctest.h"
#include "mfseg/optimizer.hpp"

namespace mfseg {
namespace {

Var<double> scalar(double v) {
  Tensor<double> t(1, 1, 1, 1);
  t(0, 0, 0, 0) = v;
  return leaf(std::move(t));
}

void set_grad(const Var<double>& p, double g) {
  p->grad = Tensor<double>(1, 1, 1, 1);
  p->grad(0, 0, 0, 0) = g;
}

// f(x) = (x - 3)^2, f'(x) = 2 (x - 3).
TEST_CASE("one Adam step on a scalar quadratic") {
  for (double x0 : {0.0, 2.5, 10.0, -4.0}) {
    const AdamOptions o{0.01, 0.9, 0.999, 1e-8};
    auto p = scalar(x0);
    Adam<double> adam({p}, o);
    const double g = 2.0 * (x0 - 3.0);
    set_grad(p, g);
    adam.step();
    const double m = (1 - o.beta1) * g;
    const double v = (1 - o.beta2) * g * g;
    const double mhat = m / (1 - o.beta1);
    const double vhat = v / (1 - o.beta2);
    const double want = x0 - o.learning_rate * mhat / (std::sqrt(vhat) + o.epsilon);
    CHECK(std::abs(p->value(0, 0, 0, 0) - want) <= 1e-10);
    CHECK(adam.steps() == 1);
  }
}

TEST_CASE("two Adam steps follow the bias-corrected recurrences") {
  const AdamOptions o{0.1, 0.8, 0.99, 1e-8};
  auto p = scalar(1.0);
  Adam<double> adam({p}, o);
  double x = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 2; ++t) {
    const double g = 2.0 * (x - 3.0);
    set_grad(p, g);
    adam.step();
    m = o.beta1 * m + (1 - o.beta1) * g;
    v = o.beta2 * v + (1 - o.beta2) * g * g;
    x -= o.learning_rate * (m / (1 - std::pow(o.beta1, t))) /
         (std::sqrt(v / (1 - std::pow(o.beta2, t))) + o.epsilon);
    CHECK(std::abs(p->value(0, 0, 0, 0) - x) <= 1e-12);
  }
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  auto p = scalar(1.5);
  Adam<double> adam({p}, {0.0});
  for (int i = 0; i < 5; ++i) {
    set_grad(p, 3.0 + i);
    adam.step();
  }
  CHECK(p->value(0, 0, 0, 0) == 1.5);
  CHECK_THROWS_AS(Adam<double>({p}, {-1.0}), std::invalid_argument);
}

TEST_CASE("missing gradient counts as zero") {
  auto p = scalar(2.0);
  Adam<double> adam({p}, {0.1});
  adam.step();
  CHECK(p->value(0, 0, 0, 0) == 2.0);
}

}  // namespace
}  // namespace mfseg
