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

#include "mfseg/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mfseg::ops {
namespace {

template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Sliding-window geometry shared by im2col and col2im. The image side is
// (channels, height, width); the patch grid is (out_h, out_w).
struct Window {
  Index channels, height, width;
  Index kh, kw, stride, padding, dilation;
  Index out_h, out_w;

  Index rows() const { return channels * kh * kw; }
};

Index conv_out(Index in, Index k, Index stride, Index padding, Index dilation) {
  return (in + 2 * padding - dilation * (k - 1) - 1) / stride + 1;
}

// col[(c*kh + ky)*kw + kx, n*out_h*out_w + oy*out_w + ox]
template <typename Scalar>
RowMatrix<Scalar> im2col(const Tensor<Scalar>& x, const Window& g) {
  const Index n_batch = x.n();
  const Index grid = g.out_h * g.out_w;
  RowMatrix<Scalar> col(g.rows(), n_batch * grid);
  for (Index c = 0; c < g.channels; ++c) {
    for (Index ky = 0; ky < g.kh; ++ky) {
      for (Index kx = 0; kx < g.kw; ++kx) {
        const Index row = (c * g.kh + ky) * g.kw + kx;
        Scalar* dst = col.row(row).data();
        for (Index n = 0; n < n_batch; ++n) {
          const Scalar* src = x.data() + x.offset(n, c, 0, 0);
          for (Index oy = 0; oy < g.out_h; ++oy) {
            const Index iy = oy * g.stride - g.padding + ky * g.dilation;
            Scalar* out = dst + n * grid + oy * g.out_w;
            if (iy < 0 || iy >= g.height) {
              std::fill(out, out + g.out_w, Scalar(0));
              continue;
            }
            const Scalar* in_row = src + iy * g.width;
            for (Index ox = 0; ox < g.out_w; ++ox) {
              const Index ix = ox * g.stride - g.padding + kx * g.dilation;
              out[ox] = (ix >= 0 && ix < g.width) ? in_row[ix] : Scalar(0);
            }
          }
        }
      }
    }
  }
  return col;
}

// Adjoint of im2col: scatters patch columns back, accumulating into x.
template <typename Scalar>
void col2im(const RowMatrix<Scalar>& col, const Window& g, Tensor<Scalar>& x) {
  const Index n_batch = x.n();
  const Index grid = g.out_h * g.out_w;
  for (Index c = 0; c < g.channels; ++c) {
    for (Index ky = 0; ky < g.kh; ++ky) {
      for (Index kx = 0; kx < g.kw; ++kx) {
        const Index row = (c * g.kh + ky) * g.kw + kx;
        const Scalar* src = col.row(row).data();
        for (Index n = 0; n < n_batch; ++n) {
          Scalar* dst = x.data() + x.offset(n, c, 0, 0);
          for (Index oy = 0; oy < g.out_h; ++oy) {
            const Index iy = oy * g.stride - g.padding + ky * g.dilation;
            if (iy < 0 || iy >= g.height) continue;
            const Scalar* in = src + n * grid + oy * g.out_w;
            Scalar* out_row = dst + iy * g.width;
            for (Index ox = 0; ox < g.out_w; ++ox) {
              const Index ix = ox * g.stride - g.padding + kx * g.dilation;
              if (ix >= 0 && ix < g.width) out_row[ix] += in[ox];
            }
          }
        }
      }
    }
  }
}

// NCHW -> [C, N*H*W]
template <typename Scalar>
RowMatrix<Scalar> channels_major(const Tensor<Scalar>& x) {
  const Index hw = x.h() * x.w();
  RowMatrix<Scalar> m(x.c(), x.n() * hw);
  for (Index n = 0; n < x.n(); ++n) {
    m.middleCols(n * hw, hw) = x.sample(n);
  }
  return m;
}

// [C, N*H*W] -> NCHW, accumulating.
template <typename Scalar>
void add_channels_major(const RowMatrix<Scalar>& m, Tensor<Scalar>& x) {
  const Index hw = x.h() * x.w();
  for (Index n = 0; n < x.n(); ++n) {
    x.sample(n) += m.middleCols(n * hw, hw);
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

template <typename Scalar>
Var<Scalar> conv2d(const Var<Scalar>& x, const Var<Scalar>& weight,
                   const Var<Scalar>& bias, ConvOptions options) {
  const Shape& xs = x->shape();
  const Shape& ws = weight->shape();
  require(ws.c == xs.c, "conv2d: weight expects " + std::to_string(ws.c) +
                            " input channels, got " + std::to_string(xs.c));
  const Window g{xs.c,
                 xs.h,
                 xs.w,
                 ws.h,
                 ws.w,
                 options.stride,
                 options.padding,
                 options.dilation,
                 conv_out(xs.h, ws.h, options.stride, options.padding,
                          options.dilation),
                 conv_out(xs.w, ws.w, options.stride, options.padding,
                          options.dilation)};
  require(g.out_h > 0 && g.out_w > 0, "conv2d: input smaller than kernel");
  const Index out_c = ws.n;

  RowMatrix<Scalar> col = im2col(x->value, g);
  typename Tensor<Scalar>::ConstMatrixMap w_mat(weight->value.data(), out_c,
                                                g.rows());
  RowMatrix<Scalar> result = w_mat * col;
  if (bias) {
    result.colwise() += bias->value.array().matrix();
  }
  Tensor<Scalar> out(xs.n, out_c, g.out_h, g.out_w);
  add_channels_major(result, out);

  std::vector<Var<Scalar>> inputs{x, weight};
  if (bias) inputs.push_back(bias);
  return make_op<Scalar>(
      std::move(out), std::move(inputs),
      [g, col = std::move(col), has_bias = static_cast<bool>(bias)](
          Node<Scalar>& self) {
        const RowMatrix<Scalar> grad = channels_major(self.grad);
        Node<Scalar>& w = self.input(1);
        typename Tensor<Scalar>::ConstMatrixMap w_mat(w.value.data(),
                                                      w.shape().n, g.rows());
        if (w.requires_grad) {
          typename Tensor<Scalar>::MatrixMap dw(w.grad_buffer().data(),
                                                w.shape().n, g.rows());
          dw.noalias() += grad * col.transpose();
        }
        if (has_bias && self.input(2).requires_grad) {
          self.input(2).grad_buffer().array() += grad.rowwise().sum().array();
        }
        Node<Scalar>& in = self.input(0);
        if (in.requires_grad) {
          RowMatrix<Scalar> dcol = w_mat.transpose() * grad;
          col2im(dcol, g, in.grad_buffer());
        }
      });
}

template <typename Scalar>
Var<Scalar> conv_transpose2d(const Var<Scalar>& x, const Var<Scalar>& weight,
                             const Var<Scalar>& bias, Index stride,
                             Index padding) {
  const Shape& xs = x->shape();
  const Shape& ws = weight->shape();
  require(ws.n == xs.c, "conv_transpose2d: weight expects " +
                            std::to_string(ws.n) + " input channels, got " +
                            std::to_string(xs.c));
  const Index out_c = ws.c;
  const Index out_h = (xs.h - 1) * stride - 2 * padding + ws.h;
  const Index out_w = (xs.w - 1) * stride - 2 * padding + ws.w;
  require(out_h > 0 && out_w > 0, "conv_transpose2d: empty output");
  // The output image plays the role of the convolution input.
  const Window g{out_c, out_h, out_w, ws.h, ws.w, stride, padding, 1, xs.h,
                 xs.w};

  RowMatrix<Scalar> x_mat = channels_major(x->value);
  typename Tensor<Scalar>::ConstMatrixMap w_mat(weight->value.data(), xs.c,
                                                g.rows());
  RowMatrix<Scalar> col = w_mat.transpose() * x_mat;
  Tensor<Scalar> out(xs.n, out_c, out_h, out_w);
  col2im(col, g, out);
  if (bias) {
    for (Index n = 0; n < xs.n; ++n) {
      out.sample(n).colwise() += bias->value.array().matrix();
    }
  }

  std::vector<Var<Scalar>> inputs{x, weight};
  if (bias) inputs.push_back(bias);
  return make_op<Scalar>(
      std::move(out), std::move(inputs),
      [g, x_mat = std::move(x_mat), has_bias = static_cast<bool>(bias)](
          Node<Scalar>& self) {
        const RowMatrix<Scalar> dcol = im2col(self.grad, g);
        Node<Scalar>& w = self.input(1);
        const Index in_c = w.shape().n;
        typename Tensor<Scalar>::ConstMatrixMap w_mat(w.value.data(), in_c,
                                                      g.rows());
        if (w.requires_grad) {
          typename Tensor<Scalar>::MatrixMap dw(w.grad_buffer().data(), in_c,
                                                g.rows());
          dw.noalias() += x_mat * dcol.transpose();
        }
        if (has_bias && self.input(2).requires_grad) {
          auto& db = self.input(2).grad_buffer();
          for (Index n = 0; n < self.grad.n(); ++n) {
            db.array() += self.grad.sample(n).rowwise().sum().array();
          }
        }
        Node<Scalar>& in = self.input(0);
        if (in.requires_grad) {
          RowMatrix<Scalar> dx = w_mat * dcol;
          add_channels_major(dx, in.grad_buffer());
        }
      });
}

template <typename Scalar>
Var<Scalar> max_pool2d(const Var<Scalar>& x, Index kernel, Index stride,
                       Index padding) {
  const Shape& s = x->shape();
  const Index out_h = conv_out(s.h, kernel, stride, padding, 1);
  const Index out_w = conv_out(s.w, kernel, stride, padding, 1);
  require(out_h > 0 && out_w > 0, "max_pool2d: input smaller than window");
  Tensor<Scalar> out(s.n, s.c, out_h, out_w);
  std::vector<Index> argmax(static_cast<std::size_t>(out.size()));
  const Tensor<Scalar>& in = x->value;
  Index o = 0;
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      for (Index oy = 0; oy < out_h; ++oy) {
        for (Index ox = 0; ox < out_w; ++ox, ++o) {
          Scalar best = -std::numeric_limits<Scalar>::infinity();
          Index best_at = -1;
          for (Index ky = 0; ky < kernel; ++ky) {
            const Index iy = oy * stride - padding + ky;
            if (iy < 0 || iy >= s.h) continue;
            for (Index kx = 0; kx < kernel; ++kx) {
              const Index ix = ox * stride - padding + kx;
              if (ix < 0 || ix >= s.w) continue;
              const Index at = in.offset(n, c, iy, ix);
              if (best_at < 0 || in.data()[at] > best) {
                best = in.data()[at];
                best_at = at;
              }
            }
          }
          out.data()[o] = best;
          argmax[static_cast<std::size_t>(o)] = best_at;
        }
      }
    }
  }
  return make_op<Scalar>(std::move(out), {x},
                         [argmax = std::move(argmax)](Node<Scalar>& self) {
                           Scalar* dx = self.input(0).grad_buffer().data();
                           const Scalar* dy = self.grad.data();
                           for (std::size_t i = 0; i < argmax.size(); ++i) {
                             dx[argmax[i]] += dy[i];
                           }
                         });
}

template <typename Scalar>
Var<Scalar> global_avg_pool(const Var<Scalar>& x) {
  const Shape& s = x->shape();
  Tensor<Scalar> out(s.n, s.c, 1, 1);
  const Scalar inv = Scalar(1) / static_cast<Scalar>(s.h * s.w);
  for (Index n = 0; n < s.n; ++n) {
    out.sample(n) = x->value.sample(n).rowwise().sum() * inv;
  }
  return make_op<Scalar>(std::move(out), {x}, [inv](Node<Scalar>& self) {
    auto& dx = self.input(0).grad_buffer();
    for (Index n = 0; n < dx.n(); ++n) {
      dx.sample(n).colwise() += self.grad.sample(n).col(0) * inv;
    }
  });
}

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& x) {
  Tensor<Scalar> out(x->shape());
  out.array() = x->value.array().max(Scalar(0));
  return make_op<Scalar>(std::move(out), {x}, [](Node<Scalar>& self) {
    Node<Scalar>& in = self.input(0);
    in.grad_buffer().array() +=
        (in.value.array() > Scalar(0)).select(self.grad.array(), Scalar(0));
  });
}

template <typename Scalar>
Var<Scalar> sigmoid(const Var<Scalar>& x) {
  // Clamped one ulp-ish away from {0, 1} so probabilities stay strictly
  // inside the open interval even when the logit saturates.
  constexpr Scalar kEps = std::numeric_limits<Scalar>::epsilon();
  Tensor<Scalar> out(x->shape());
  out.array() = (Scalar(1) / (Scalar(1) + (-x->value.array()).exp()))
                    .max(kEps)
                    .min(Scalar(1) - kEps);
  return make_op<Scalar>(std::move(out), {x}, [](Node<Scalar>& self) {
    const auto& y = self.value.array();
    self.input(0).grad_buffer().array() +=
        self.grad.array() * y * (Scalar(1) - y);
  });
}

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  require(a->shape() == b->shape(), "add: shape mismatch " +
                                        to_string(a->shape()) + " vs " +
                                        to_string(b->shape()));
  Tensor<Scalar> out(a->shape());
  out.array() = a->value.array() + b->value.array();
  return make_op<Scalar>(std::move(out), {a, b}, [](Node<Scalar>& self) {
    for (std::size_t i = 0; i < 2; ++i) {
      if (self.input(i).requires_grad) {
        self.input(i).grad_buffer().array() += self.grad.array();
      }
    }
  });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& x, Scalar factor) {
  Tensor<Scalar> out(x->shape());
  out.array() = x->value.array() * factor;
  return make_op<Scalar>(std::move(out), {x}, [factor](Node<Scalar>& self) {
    self.input(0).grad_buffer().array() += self.grad.array() * factor;
  });
}

template <typename Scalar>
Var<Scalar> mean(const std::vector<Var<Scalar>>& xs) {
  require(!xs.empty(), "mean: no inputs");
  Tensor<Scalar> out(xs.front()->shape());
  for (const auto& x : xs) {
    require(x->shape() == out.shape(), "mean: shape mismatch");
    out.array() += x->value.array();
  }
  const Scalar inv = Scalar(1) / static_cast<Scalar>(xs.size());
  out.array() *= inv;
  return make_op<Scalar>(std::move(out), xs, [inv](Node<Scalar>& self) {
    for (auto& in : self.inputs) {
      if (in->requires_grad) in->grad_buffer().array() += self.grad.array() * inv;
    }
  });
}

template <typename Scalar>
Var<Scalar> scale_channels(const Var<Scalar>& x, const Var<Scalar>& s) {
  const Shape& xs = x->shape();
  require(s->shape() == (Shape{xs.n, xs.c, 1, 1}),
          "scale_channels: scale must be [N, C, 1, 1]");
  Tensor<Scalar> out(xs);
  for (Index n = 0; n < xs.n; ++n) {
    out.sample(n) =
        s->value.sample(n).col(0).asDiagonal() * x->value.sample(n);
  }
  return make_op<Scalar>(std::move(out), {x, s}, [](Node<Scalar>& self) {
    Node<Scalar>& in = self.input(0);
    Node<Scalar>& sc = self.input(1);
    for (Index n = 0; n < self.grad.n(); ++n) {
      if (in.requires_grad) {
        in.grad_buffer().sample(n) +=
            sc.value.sample(n).col(0).asDiagonal() * self.grad.sample(n);
      }
      if (sc.requires_grad) {
        sc.grad_buffer().sample(n).col(0) +=
            (self.grad.sample(n).array() * in.value.sample(n).array())
                .rowwise()
                .sum()
                .matrix();
      }
    }
  });
}

template <typename Scalar>
Var<Scalar> scale_spatial(const Var<Scalar>& x, const Var<Scalar>& a) {
  const Shape& xs = x->shape();
  require(a->shape() == (Shape{xs.n, 1, xs.h, xs.w}),
          "scale_spatial: gate must be [N, 1, H, W]");
  Tensor<Scalar> out(xs);
  for (Index n = 0; n < xs.n; ++n) {
    out.sample(n).array() =
        x->value.sample(n).array().rowwise() * a->value.sample(n).array().row(0);
  }
  return make_op<Scalar>(std::move(out), {x, a}, [](Node<Scalar>& self) {
    Node<Scalar>& in = self.input(0);
    Node<Scalar>& gate = self.input(1);
    for (Index n = 0; n < self.grad.n(); ++n) {
      if (in.requires_grad) {
        in.grad_buffer().sample(n).array() +=
            self.grad.sample(n).array().rowwise() *
            gate.value.sample(n).array().row(0);
      }
      if (gate.requires_grad) {
        gate.grad_buffer().sample(n).array().row(0) +=
            (self.grad.sample(n).array() * in.value.sample(n).array())
                .colwise()
                .sum();
      }
    }
  });
}

template <typename Scalar>
Var<Scalar> concat(const std::vector<Var<Scalar>>& xs) {
  require(!xs.empty(), "concat: no inputs");
  const Shape& first = xs.front()->shape();
  Index channels = 0;
  for (const auto& x : xs) {
    const Shape& s = x->shape();
    require(s.n == first.n && s.h == first.h && s.w == first.w,
            "concat: spatial/batch mismatch " + to_string(s) + " vs " +
                to_string(first));
    channels += s.c;
  }
  Tensor<Scalar> out(first.n, channels, first.h, first.w);
  for (Index n = 0; n < first.n; ++n) {
    Index at = 0;
    for (const auto& x : xs) {
      out.sample(n).middleRows(at, x->shape().c) = x->value.sample(n);
      at += x->shape().c;
    }
  }
  return make_op<Scalar>(std::move(out), xs, [](Node<Scalar>& self) {
    for (Index n = 0; n < self.grad.n(); ++n) {
      Index at = 0;
      for (auto& in : self.inputs) {
        const Index c = in->shape().c;
        if (in->requires_grad) {
          in->grad_buffer().sample(n) += self.grad.sample(n).middleRows(at, c);
        }
        at += c;
      }
    }
  });
}

template <typename Scalar>
Var<Scalar> upsample_nearest(const Var<Scalar>& x, Index factor) {
  require(factor >= 1, "upsample_nearest: factor must be >= 1");
  if (factor == 1) return x;
  const Shape& s = x->shape();
  Tensor<Scalar> out(s.n, s.c, s.h * factor, s.w * factor);
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      auto src = x->value.plane(n, c);
      auto dst = out.plane(n, c);
      for (Index y = 0; y < dst.rows(); ++y) {
        for (Index xx = 0; xx < dst.cols(); ++xx) {
          dst(y, xx) = src(y / factor, xx / factor);
        }
      }
    }
  }
  return make_op<Scalar>(std::move(out), {x}, [factor](Node<Scalar>& self) {
    auto& dx = self.input(0).grad_buffer();
    for (Index n = 0; n < dx.n(); ++n) {
      for (Index c = 0; c < dx.c(); ++c) {
        auto g = self.grad.plane(n, c);
        auto d = dx.plane(n, c);
        for (Index y = 0; y < g.rows(); ++y) {
          for (Index xx = 0; xx < g.cols(); ++xx) {
            d(y / factor, xx / factor) += g(y, xx);
          }
        }
      }
    }
  });
}

template <typename Scalar>
Var<Scalar> batch_norm(const Var<Scalar>& x, const Var<Scalar>& gamma,
                       const Var<Scalar>& beta, Tensor<Scalar>& running_mean,
                       Tensor<Scalar>& running_var, bool training,
                       Scalar momentum, Scalar eps) {
  const Shape& s = x->shape();
  require(gamma->shape() == (Shape{1, s.c, 1, 1}) &&
              beta->shape() == gamma->shape(),
          "batch_norm: affine parameters must be [1, C, 1, 1]");
  const Index count = s.n * s.h * s.w;
  using Vec = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  Vec mu = Vec::Zero(s.c);
  Vec var = Vec::Zero(s.c);
  if (training) {
    for (Index n = 0; n < s.n; ++n) {
      mu += x->value.sample(n).array().rowwise().sum();
    }
    mu /= static_cast<Scalar>(count);
    for (Index n = 0; n < s.n; ++n) {
      var += (x->value.sample(n).array().colwise() - mu).square().rowwise().sum();
    }
    var /= static_cast<Scalar>(count);
    const Scalar unbias =
        count > 1 ? static_cast<Scalar>(count) / static_cast<Scalar>(count - 1)
                  : Scalar(1);
    running_mean.array() =
        (Scalar(1) - momentum) * running_mean.array() + momentum * mu;
    running_var.array() =
        (Scalar(1) - momentum) * running_var.array() + momentum * var * unbias;
  } else {
    mu = running_mean.array();
    var = running_var.array();
  }
  const Vec inv_std = (var + eps).rsqrt();
  Tensor<Scalar> xhat(s);
  Tensor<Scalar> out(s);
  const auto& g = gamma->value.array();
  const auto& b = beta->value.array();
  for (Index n = 0; n < s.n; ++n) {
    xhat.sample(n).array() =
        (x->value.sample(n).array().colwise() - mu).colwise() * inv_std;
    out.sample(n).array() =
        (xhat.sample(n).array().colwise() * g).colwise() + b;
  }
  return make_op<Scalar>(
      std::move(out), {x, gamma, beta},
      [xhat = std::move(xhat), inv_std, training, count](Node<Scalar>& self) {
        const Index c = self.grad.c();
        Vec sum_dy = Vec::Zero(c);
        Vec sum_dy_xhat = Vec::Zero(c);
        for (Index n = 0; n < self.grad.n(); ++n) {
          sum_dy += self.grad.sample(n).array().rowwise().sum();
          sum_dy_xhat += (self.grad.sample(n).array() * xhat.sample(n).array())
                             .rowwise()
                             .sum();
        }
        Node<Scalar>& in = self.input(0);
        Node<Scalar>& gamma_node = self.input(1);
        Node<Scalar>& beta_node = self.input(2);
        if (gamma_node.requires_grad) gamma_node.grad_buffer().array() += sum_dy_xhat;
        if (beta_node.requires_grad) beta_node.grad_buffer().array() += sum_dy;
        if (!in.requires_grad) return;
        const Vec scale = gamma_node.value.array() * inv_std;
        auto& dx = in.grad_buffer();
        if (training) {
          const Scalar inv_count = Scalar(1) / static_cast<Scalar>(count);
          const Vec mean_dy = sum_dy * inv_count;
          const Vec mean_dy_xhat = sum_dy_xhat * inv_count;
          for (Index n = 0; n < self.grad.n(); ++n) {
            dx.sample(n).array() +=
                ((self.grad.sample(n).array().colwise() - mean_dy) -
                 xhat.sample(n).array().colwise() * mean_dy_xhat)
                    .colwise() *
                scale;
          }
        } else {
          for (Index n = 0; n < self.grad.n(); ++n) {
            dx.sample(n).array() += self.grad.sample(n).array().colwise() * scale;
          }
        }
      });
}

template <typename Scalar>
Var<Scalar> dropout(const Var<Scalar>& x, double rate, Rng& rng) {
  require(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0, 1)");
  if (rate == 0.0) return x;
  const Scalar keep_scale = static_cast<Scalar>(1.0 / (1.0 - rate));
  Tensor<Scalar> mask(x->shape());
  for (Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = rng.uniform() >= rate ? keep_scale : Scalar(0);
  }
  Tensor<Scalar> out(x->shape());
  out.array() = x->value.array() * mask.array();
  return make_op<Scalar>(std::move(out), {x},
                         [mask = std::move(mask)](Node<Scalar>& self) {
                           self.input(0).grad_buffer().array() +=
                               self.grad.array() * mask.array();
                         });
}

#define MFSEG_INSTANTIATE_OPS(T)                                              \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&,      \
                            ConvOptions);                                     \
  template Var<T> conv_transpose2d<T>(const Var<T>&, const Var<T>&,           \
                                      const Var<T>&, Index, Index);           \
  template Var<T> max_pool2d<T>(const Var<T>&, Index, Index, Index);          \
  template Var<T> global_avg_pool<T>(const Var<T>&);                          \
  template Var<T> relu<T>(const Var<T>&);                                     \
  template Var<T> sigmoid<T>(const Var<T>&);                                  \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                       \
  template Var<T> scale<T>(const Var<T>&, T);                                 \
  template Var<T> mean<T>(const std::vector<Var<T>>&);                        \
  template Var<T> scale_channels<T>(const Var<T>&, const Var<T>&);            \
  template Var<T> scale_spatial<T>(const Var<T>&, const Var<T>&);             \
  template Var<T> concat<T>(const std::vector<Var<T>>&);                      \
  template Var<T> upsample_nearest<T>(const Var<T>&, Index);                  \
  template Var<T> batch_norm<T>(const Var<T>&, const Var<T>&, const Var<T>&,  \
                                Tensor<T>&, Tensor<T>&, bool, T, T);          \
  template Var<T> dropout<T>(const Var<T>&, double, Rng&);

MFSEG_INSTANTIATE_OPS(float)
MFSEG_INSTANTIATE_OPS(double)

#undef MFSEG_INSTANTIATE_OPS

}  // namespace mfseg::ops
