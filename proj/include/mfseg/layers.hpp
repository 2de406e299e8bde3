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

#ifndef MFSEG_LAYERS_HPP_
#define MFSEG_LAYERS_HPP_

#include <cmath>
#include <deque>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mfseg/autograd.hpp"
#include "mfseg/ops.hpp"
#include "mfseg/random.hpp"

namespace mfseg {

/// Named, ordered registry of trainable parameters and non-trainable buffers
/// (batch-norm running statistics). Insertion order is the canonical order
/// used by checkpoints and optimizers.
template <typename Scalar>
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Var<Scalar> var;
  };
  struct Buffer {
    std::string name;
    Tensor<Scalar> value;
  };
  using Snapshot = std::map<std::string, Tensor<Scalar>>;

  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;

  Var<Scalar> create(const std::string& name, Tensor<Scalar> init) {
    check_unique(name);
    params_.push_back({name, leaf(std::move(init))});
    return params_.back().var;
  }

  // Deque storage keeps the returned reference valid across later inserts.
  Tensor<Scalar>& create_buffer(const std::string& name, Tensor<Scalar> init) {
    check_unique(name);
    buffers_.push_back({name, std::move(init)});
    return buffers_.back().value;
  }

  const std::vector<Entry>& parameters() const { return params_; }
  std::deque<Buffer>& buffers() { return buffers_; }
  const std::deque<Buffer>& buffers() const { return buffers_; }

  Index count() const {
    Index total = 0;
    for (const auto& p : params_) total += p.var->value.size();
    return total;
  }

  void zero_grad() {
    for (auto& p : params_) {
      if (!p.var->grad.empty()) p.var->grad.array().setZero();
    }
  }

  Snapshot snapshot() const {
    Snapshot out;
    for (const auto& p : params_) out.emplace(p.name, p.var->value);
    for (const auto& b : buffers_) out.emplace(b.name, b.value);
    return out;
  }

  void restore(const Snapshot& snap) {
    for (auto& p : params_) p.var->value = lookup(snap, p.name, p.var->shape());
    for (auto& b : buffers_) b.value = lookup(snap, b.name, b.value.shape());
  }

  Var<Scalar> find(const std::string& name) const {
    for (const auto& p : params_) {
      if (p.name == name) return p.var;
    }
    return nullptr;
  }

 private:
  void check_unique(const std::string& name) {
    if (!names_.insert({name, true}).second) {
      throw std::logic_error("duplicate parameter name: " + name);
    }
  }

  static const Tensor<Scalar>& lookup(const Snapshot& snap,
                                      const std::string& name,
                                      const Shape& shape) {
    auto it = snap.find(name);
    if (it == snap.end()) {
      throw std::invalid_argument("snapshot is missing tensor " + name);
    }
    if (!(it->second.shape() == shape)) {
      throw std::invalid_argument("snapshot tensor " + name + " has shape " +
                                  to_string(it->second.shape()) +
                                  ", expected " + to_string(shape));
    }
    return it->second;
  }

  std::vector<Entry> params_;
  std::deque<Buffer> buffers_;
  std::map<std::string, bool> names_;
};

// Zero-mean normal weights with standard deviation sqrt(2 / fan_in).
template <typename Scalar>
Tensor<Scalar> he_normal(const Shape& shape, Index fan_in, Rng& rng) {
  Tensor<Scalar> t(shape);
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (Index i = 0; i < t.size(); ++i) {
    t.data()[i] = static_cast<Scalar>(rng.normal() * stddev);
  }
  return t;
}

/// Everything a layer needs at construction time.
template <typename Scalar>
struct BuildContext {
  ParameterStore<Scalar>& store;
  Rng& rng;

  std::string join(const std::string& prefix, const std::string& name) const {
    return prefix.empty() ? name : prefix + "." + name;
  }
};

/// Per-call state of a forward pass.
template <typename Scalar>
struct ForwardContext {
  bool training = false;
  Rng* rng = nullptr;
  // When set, attention gates append their coefficient maps here.
  std::vector<Tensor<Scalar>>* attention_maps = nullptr;

  Var<Scalar> dropout(const Var<Scalar>& x, double rate) const {
    if (!training || rate == 0.0) return x;
    if (rng == nullptr) {
      throw std::logic_error("training-mode dropout needs a random source");
    }
    return ops::dropout(x, rate, *rng);
  }
};

template <typename Scalar>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(BuildContext<Scalar>& ctx, const std::string& name, Index in,
         Index out, Index kernel, ops::ConvOptions options = {},
         bool with_bias = true)
      : options_(options) {
    weight_ = ctx.store.create(ctx.join(name, "weight"),
                               he_normal<Scalar>({out, in, kernel, kernel},
                                                 in * kernel * kernel, ctx.rng));
    if (with_bias) {
      bias_ = ctx.store.create(ctx.join(name, "bias"),
                               Tensor<Scalar>(1, out, 1, 1));
    }
  }

  // Same-padded kernel of odd size.
  static Conv2d same(BuildContext<Scalar>& ctx, const std::string& name,
                     Index in, Index out, Index kernel, Index dilation = 1,
                     bool with_bias = true) {
    return Conv2d(ctx, name, in, out, kernel,
                  {1, dilation * (kernel - 1) / 2, dilation}, with_bias);
  }

  Var<Scalar> operator()(const Var<Scalar>& x) const {
    return ops::conv2d(x, weight_, bias_, options_);
  }

  const Var<Scalar>& weight() const { return weight_; }
  const Var<Scalar>& bias() const { return bias_; }

 private:
  ops::ConvOptions options_;
  Var<Scalar> weight_;
  Var<Scalar> bias_;
};

template <typename Scalar>
class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(BuildContext<Scalar>& ctx, const std::string& name, Index in,
                  Index out, Index kernel, Index stride, Index padding)
      : stride_(stride), padding_(padding) {
    weight_ = ctx.store.create(ctx.join(name, "weight"),
                               he_normal<Scalar>({in, out, kernel, kernel},
                                                 in * kernel * kernel, ctx.rng));
    bias_ = ctx.store.create(ctx.join(name, "bias"), Tensor<Scalar>(1, out, 1, 1));
  }

  // Kernel 4, stride 2, padding 1: exactly doubles H and W.
  static ConvTranspose2d up2(BuildContext<Scalar>& ctx, const std::string& name,
                             Index in, Index out) {
    return ConvTranspose2d(ctx, name, in, out, 4, 2, 1);
  }

  Var<Scalar> operator()(const Var<Scalar>& x) const {
    return ops::conv_transpose2d(x, weight_, bias_, stride_, padding_);
  }

 private:
  Index stride_ = 2;
  Index padding_ = 1;
  Var<Scalar> weight_;
  Var<Scalar> bias_;
};

template <typename Scalar>
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  BatchNorm2d(BuildContext<Scalar>& ctx, const std::string& name,
              Index channels) {
    gamma_ = ctx.store.create(ctx.join(name, "gamma"),
                              Tensor<Scalar>::Constant({1, channels, 1, 1}, 1));
    beta_ = ctx.store.create(ctx.join(name, "beta"),
                             Tensor<Scalar>(1, channels, 1, 1));
    running_mean_ = &ctx.store.create_buffer(ctx.join(name, "running_mean"),
                                             Tensor<Scalar>(1, channels, 1, 1));
    running_var_ = &ctx.store.create_buffer(
        ctx.join(name, "running_var"),
        Tensor<Scalar>::Constant({1, channels, 1, 1}, 1));
  }

  Var<Scalar> operator()(const Var<Scalar>& x,
                         const ForwardContext<Scalar>& fc) const {
    return ops::batch_norm(x, gamma_, beta_, *running_mean_, *running_var_,
                           fc.training);
  }

 private:
  Var<Scalar> gamma_;
  Var<Scalar> beta_;
  Tensor<Scalar>* running_mean_ = nullptr;
  Tensor<Scalar>* running_var_ = nullptr;
};

}  // namespace mfseg

#endif  // MFSEG_LAYERS_HPP_
