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

// Training losses with analytic gradients, and overlap metrics on binary
// masks. Losses and metrics accept any Eigen array expression.
//
// Conventions:
//   * A binary mask holds exactly 0 and 1.
//   * DSC and IoU of two empty masks are 1; one empty mask scores 0.
//   * binarize() uses p >= threshold.

#ifndef MFSEG_LOSSMETRICS_HPP_
#define MFSEG_LOSSMETRICS_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mfseg/tensor.hpp"

namespace mfseg {

enum class LossKind { kDice, kBce, kFocal };
enum class MaskShape { kRound, kSquare };

std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& text);
std::string to_string(MaskShape shape);
MaskShape parse_mask_shape(const std::string& text);

struct LossConfig {
  LossKind kind = LossKind::kDice;
  double dice_smooth = 1.0;
  double focal_gamma = 2.0;
  double focal_alpha = 0.25;

  void validate() const;
};

template <typename Scalar>
struct LossValue {
  Scalar loss;
  Plane<Scalar> gradient;
};

// Probability clamp used by the cross-entropy losses.
inline constexpr double kProbabilityEpsilon = 1e-7;

namespace detail {

template <typename A, typename B>
void check_same_dims(const Eigen::ArrayBase<A>& a, const Eigen::ArrayBase<B>& b,
                     const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch " +
                                std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
  }
}

template <typename A>
void check_binary(const Eigen::ArrayBase<A>& a, const char* what) {
  using S = typename A::Scalar;
  if (!(a == S(0) || a == S(1)).all()) {
    throw std::invalid_argument(std::string(what) + ": mask is not binary");
  }
}

struct OverlapCounts {
  std::int64_t a = 0;
  std::int64_t b = 0;
  std::int64_t both = 0;
};

template <typename A, typename B>
OverlapCounts overlap(const Eigen::ArrayBase<A>& a, const Eigen::ArrayBase<B>& b,
                      const char* what) {
  check_same_dims(a, b, what);
  check_binary(a, what);
  check_binary(b, what);
  using SA = typename A::Scalar;
  using SB = typename B::Scalar;
  const auto on_a = (a == SA(1));
  const auto on_b = (b == SB(1));
  return {static_cast<std::int64_t>(on_a.count()),
          static_cast<std::int64_t>(on_b.count()),
          static_cast<std::int64_t>((on_a && on_b).count())};
}

}  // namespace detail

/// Pixel = 1 iff p >= threshold; threshold must lie in (0, 1).
template <typename Derived>
Plane<float> binarize(const Eigen::ArrayBase<Derived>& prob, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("binarize: threshold must lie in (0, 1)");
  }
  using S = typename Derived::Scalar;
  return (prob >= static_cast<S>(threshold)).template cast<float>();
}

/// DSC = 2|A n B| / (|A| + |B|).
template <typename A, typename B>
double dice_coefficient(const Eigen::ArrayBase<A>& a, const Eigen::ArrayBase<B>& b) {
  const auto c = detail::overlap(a, b, "dice_coefficient");
  if (c.a + c.b == 0) return 1.0;
  return 2.0 * static_cast<double>(c.both) / static_cast<double>(c.a + c.b);
}

/// IoU = |A n B| / |A u B|.
template <typename A, typename B>
double iou(const Eigen::ArrayBase<A>& a, const Eigen::ArrayBase<B>& b) {
  const auto c = detail::overlap(a, b, "iou");
  const std::int64_t uni = c.a + c.b - c.both;
  if (uni == 0) return 1.0;
  return static_cast<double>(c.both) / static_cast<double>(uni);
}

/// Soft Dice: 1 - (2 sum(p g) + s) / (sum p + sum g + s).
template <typename P, typename G>
LossValue<typename P::Scalar> dice_loss(const Eigen::ArrayBase<P>& pred,
                                        const Eigen::ArrayBase<G>& gt,
                                        const LossConfig& cfg) {
  using S = typename P::Scalar;
  detail::check_same_dims(pred, gt, "dice_loss");
  const auto g = gt.template cast<S>();
  const S s = static_cast<S>(cfg.dice_smooth);
  const S num = S(2) * (pred * g).sum() + s;
  const S den = pred.sum() + g.sum() + s;
  if (den == S(0)) {
    // Empty prediction, empty target, no smoothing: define a perfect score.
    return {S(0), Plane<S>::Zero(pred.rows(), pred.cols())};
  }
  LossValue<S> out{S(1) - num / den, Plane<S>()};
  // d/dp_i = -(2 g_i den - num) / den^2
  out.gradient = (num - S(2) * g * den) / (den * den);
  return out;
}

/// Mean binary cross-entropy on p clamped to [eps, 1 - eps].
template <typename P, typename G>
LossValue<typename P::Scalar> bce_loss(const Eigen::ArrayBase<P>& pred,
                                       const Eigen::ArrayBase<G>& gt) {
  using S = typename P::Scalar;
  detail::check_same_dims(pred, gt, "bce_loss");
  const S eps = static_cast<S>(kProbabilityEpsilon);
  const S n = static_cast<S>(pred.size());
  const Plane<S> p = pred.max(eps).min(S(1) - eps);
  const Plane<S> g = gt.template cast<S>();
  LossValue<S> out;
  out.loss = -(g * p.log() + (S(1) - g) * (S(1) - p).log()).sum() / n;
  const auto inside = (pred > eps && pred < S(1) - eps);
  out.gradient = inside.select((-g / p + (S(1) - g) / (S(1) - p)) / n, S(0));
  return out;
}

/// Mean focal loss -alpha (1 - p_t)^gamma log(p_t), p_t = p where g = 1 and
/// 1 - p elsewhere. gamma = 0, alpha = 1 is exactly bce_loss.
template <typename P, typename G>
LossValue<typename P::Scalar> focal_loss(const Eigen::ArrayBase<P>& pred,
                                         const Eigen::ArrayBase<G>& gt,
                                         const LossConfig& cfg) {
  using S = typename P::Scalar;
  detail::check_same_dims(pred, gt, "focal_loss");
  const S eps = static_cast<S>(kProbabilityEpsilon);
  const S n = static_cast<S>(pred.size());
  const S alpha = static_cast<S>(cfg.focal_alpha);
  const S gamma = static_cast<S>(cfg.focal_gamma);
  LossValue<S> out{S(0), Plane<S>::Zero(pred.rows(), pred.cols())};
  for (Index r = 0; r < pred.rows(); ++r) {
    for (Index c = 0; c < pred.cols(); ++c) {
      const S raw = pred(r, c);
      const S p = std::clamp(raw, eps, S(1) - eps);
      const bool positive = gt(r, c) > 0.5;
      const S pt = positive ? p : S(1) - p;
      const S q = S(1) - pt;
      const S log_pt = std::log(pt);
      const S weight = gamma == S(0) ? S(1) : std::pow(q, gamma);
      out.loss += -alpha * weight * log_pt;
      if (raw > eps && raw < S(1) - eps) {
        // d/dpt of -alpha q^gamma log(pt) with dq/dpt = -1.
        S dpt = -alpha * weight / pt;
        if (gamma != S(0)) dpt += alpha * gamma * std::pow(q, gamma - S(1)) * log_pt;
        out.gradient(r, c) = (positive ? dpt : -dpt) / n;
      }
    }
  }
  out.loss /= n;
  return out;
}

template <typename P, typename G>
LossValue<typename P::Scalar> compute_loss(const Eigen::ArrayBase<P>& pred,
                                           const Eigen::ArrayBase<G>& gt,
                                           const LossConfig& cfg) {
  switch (cfg.kind) {
    case LossKind::kDice: return dice_loss(pred, gt, cfg);
    case LossKind::kBce: return bce_loss(pred, gt);
    case LossKind::kFocal: return focal_loss(pred, gt, cfg);
  }
  throw std::invalid_argument("unknown loss kind");
}

// ---------------------------------------------------------------------------
// ROC

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct RocCurve {
  // Sorted by (fpr, tpr), endpoints (0,0) and (1,1) included.
  std::vector<RocPoint> points;
  double auc = 0.0;
};

/// Pools pixels across all pairs and sweeps thresholds k / (n - 1),
/// k = 0..n-1, predicting positive when p >= t. AUC is the trapezoid area
/// over the sorted points.
RocCurve roc_points(const std::vector<Plane<float>>& prob_maps,
                    const std::vector<Plane<float>>& gts,
                    int n_thresholds = 101);

// ---------------------------------------------------------------------------
// Reports

struct ImageScore {
  std::string image_id;
  double dsc = 0.0;
  double iou = 0.0;
};

struct MetricsReport {
  std::vector<ImageScore> per_image;
  double mean_dsc = 0.0;
  double mean_iou = 0.0;
  std::size_t n_images = 0;
  MaskShape mask_shape = MaskShape::kRound;
  double threshold = 0.5;
  std::optional<RocCurve> roc;

  // Recomputes the means from per_image.
  void finalize();
};

void to_json(nlohmann::json& j, const RocCurve& roc);
void from_json(const nlohmann::json& j, RocCurve& roc);
void to_json(nlohmann::json& j, const MetricsReport& report);
void from_json(const nlohmann::json& j, MetricsReport& report);

// "model,split,mask_shape,dsc,iou" row, 4 decimal places.
std::string csv_row(const std::string& model, const std::string& split,
                    const MetricsReport& report);

// Fixed 4-decimal formatting used by every CSV writer.
std::string format_fixed4(double value);

}  // namespace mfseg

#endif  // MFSEG_LOSSMETRICS_HPP_
