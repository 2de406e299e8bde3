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

#ifndef MFSEG_TENSOR_HPP_
#define MFSEG_TENSOR_HPP_

#include <Eigen/Dense>

#include <cassert>
#include <ostream>
#include <string>

namespace mfseg {

using Index = Eigen::Index;

// A single image plane, height x width, row-major so that (row, col) maps to
// (y, x) and the storage order matches raster order.
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Shape {
  Index n = 0;
  Index c = 0;
  Index h = 0;
  Index w = 0;

  Index size() const { return n * c * h * w; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Shape& s) {
  return os << "[" << s.n << "," << s.c << "," << s.h << "," << s.w << "]";
}

inline std::string to_string(const Shape& s) {
  return "[" + std::to_string(s.n) + "," + std::to_string(s.c) + "," +
         std::to_string(s.h) + "," + std::to_string(s.w) + "]";
}

/// Dense NCHW tensor backed by a contiguous Eigen array.
template <typename Scalar_>
class Tensor {
 public:
  using Scalar = Scalar_;
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using MatrixMap = Eigen::Map<
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstMatrixMap = Eigen::Map<const Eigen::Matrix<
      Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using PlaneMap = Eigen::Map<Plane<Scalar>>;
  using ConstPlaneMap = Eigen::Map<const Plane<Scalar>>;

  Tensor() = default;
  explicit Tensor(const Shape& shape)
      : shape_(shape), data_(Array::Zero(shape.size())) {}
  Tensor(Index n, Index c, Index h, Index w) : Tensor(Shape{n, c, h, w}) {}

  static Tensor Zero(const Shape& shape) { return Tensor(shape); }
  static Tensor Constant(const Shape& shape, Scalar value) {
    Tensor t(shape);
    t.data_.setConstant(value);
    return t;
  }

  const Shape& shape() const { return shape_; }
  Index n() const { return shape_.n; }
  Index c() const { return shape_.c; }
  Index h() const { return shape_.h; }
  Index w() const { return shape_.w; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Array& array() { return data_; }
  const Array& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Index offset(Index n, Index c, Index y, Index x) const {
    return ((n * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  Scalar& operator()(Index n, Index c, Index y, Index x) {
    return data_[offset(n, c, y, x)];
  }
  Scalar operator()(Index n, Index c, Index y, Index x) const {
    return data_[offset(n, c, y, x)];
  }

  // One (n, c) plane as an H x W array.
  PlaneMap plane(Index n, Index c) {
    return PlaneMap(data() + offset(n, c, 0, 0), shape_.h, shape_.w);
  }
  ConstPlaneMap plane(Index n, Index c) const {
    return ConstPlaneMap(data() + offset(n, c, 0, 0), shape_.h, shape_.w);
  }

  // Sample n viewed as a C x (H*W) matrix.
  MatrixMap sample(Index n) {
    return MatrixMap(data() + offset(n, 0, 0, 0), shape_.c, shape_.h * shape_.w);
  }
  ConstMatrixMap sample(Index n) const {
    return ConstMatrixMap(data() + offset(n, 0, 0, 0), shape_.c,
                          shape_.h * shape_.w);
  }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> out(shape_);
    out.array() = data_.template cast<Other>();
    return out;
  }

 private:
  Shape shape_{};
  Array data_;
};

}  // namespace mfseg

#endif  // MFSEG_TENSOR_HPP_
