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

#include "mfseg/lossmetrics.hpp"

#include <cstdio>

namespace mfseg {

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kDice: return "dice";
    case LossKind::kBce: return "bce";
    case LossKind::kFocal: return "focal";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& text) {
  if (text == "dice") return LossKind::kDice;
  if (text == "bce") return LossKind::kBce;
  if (text == "focal") return LossKind::kFocal;
  throw std::invalid_argument("unknown loss '" + text + "'");
}

std::string to_string(MaskShape shape) {
  return shape == MaskShape::kRound ? "round" : "square";
}

MaskShape parse_mask_shape(const std::string& text) {
  if (text == "round") return MaskShape::kRound;
  if (text == "square") return MaskShape::kSquare;
  throw std::invalid_argument("unknown mask shape '" + text + "'");
}

void LossConfig::validate() const {
  if (!(dice_smooth >= 0.0)) throw std::invalid_argument("dice_smooth must be >= 0");
  if (!(focal_gamma >= 0.0)) throw std::invalid_argument("focal_gamma must be >= 0");
  if (!(focal_alpha > 0.0 && focal_alpha <= 1.0)) {
    throw std::invalid_argument("focal_alpha must lie in (0, 1]");
  }
}

RocCurve roc_points(const std::vector<Plane<float>>& prob_maps,
                    const std::vector<Plane<float>>& gts, int n_thresholds) {
  if (prob_maps.empty()) throw std::invalid_argument("roc_points: empty input");
  if (prob_maps.size() != gts.size()) {
    throw std::invalid_argument("roc_points: prediction and ground-truth counts differ");
  }
  if (n_thresholds < 2) throw std::invalid_argument("roc_points: need >= 2 thresholds");

  const int steps = n_thresholds - 1;
  auto threshold = [steps](int k) { return static_cast<double>(k) / steps; };
  // hist[k] counts pixels whose highest passed threshold index is k;
  // index -1 (below every threshold) is dropped.
  std::vector<std::int64_t> pos_hist(static_cast<std::size_t>(n_thresholds), 0);
  std::vector<std::int64_t> neg_hist(static_cast<std::size_t>(n_thresholds), 0);
  std::int64_t positives = 0;
  std::int64_t negatives = 0;
  for (std::size_t i = 0; i < prob_maps.size(); ++i) {
    detail::check_same_dims(prob_maps[i], gts[i], "roc_points");
    const auto& p = prob_maps[i];
    const auto& g = gts[i];
    for (Index r = 0; r < p.rows(); ++r) {
      for (Index c = 0; c < p.cols(); ++c) {
        const double v = p(r, c);
        int k = static_cast<int>(std::floor(v * steps));
        k = std::clamp(k, -1, steps);
        while (k + 1 <= steps && v >= threshold(k + 1)) ++k;
        while (k >= 0 && v < threshold(k)) --k;
        const bool positive = g(r, c) >= 0.5f;
        (positive ? positives : negatives)++;
        if (k >= 0) (positive ? pos_hist : neg_hist)[static_cast<std::size_t>(k)]++;
      }
    }
  }
  if (positives == 0) {
    throw std::invalid_argument("roc_points: degenerate ground truth (no positive pixels)");
  }
  if (negatives == 0) {
    throw std::invalid_argument("roc_points: degenerate ground truth (no negative pixels)");
  }

  RocCurve roc;
  roc.points.push_back({0.0, 0.0});
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::vector<RocPoint> sweep;
  for (int k = steps; k >= 0; --k) {
    tp += pos_hist[static_cast<std::size_t>(k)];
    fp += neg_hist[static_cast<std::size_t>(k)];
    sweep.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                     static_cast<double>(tp) / static_cast<double>(positives)});
  }
  roc.points.insert(roc.points.end(), sweep.begin(), sweep.end());
  roc.points.push_back({1.0, 1.0});
  std::stable_sort(roc.points.begin(), roc.points.end(),
                   [](const RocPoint& a, const RocPoint& b) {
                     return a.fpr < b.fpr || (a.fpr == b.fpr && a.tpr < b.tpr);
                   });
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    const auto& a = roc.points[i - 1];
    const auto& b = roc.points[i];
    roc.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return roc;
}

void MetricsReport::finalize() {
  n_images = per_image.size();
  double dsc = 0.0;
  double jac = 0.0;
  for (const auto& s : per_image) {
    dsc += s.dsc;
    jac += s.iou;
  }
  mean_dsc = n_images ? dsc / static_cast<double>(n_images) : 0.0;
  mean_iou = n_images ? jac / static_cast<double>(n_images) : 0.0;
}

void to_json(nlohmann::json& j, const RocCurve& roc) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : roc.points) points.push_back({p.fpr, p.tpr});
  j = nlohmann::json{{"points", points}, {"auc", roc.auc}};
}

void from_json(const nlohmann::json& j, RocCurve& roc) {
  roc.points.clear();
  for (const auto& p : j.at("points")) {
    roc.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  }
  roc.auc = j.at("auc").get<double>();
}

void to_json(nlohmann::json& j, const MetricsReport& report) {
  nlohmann::json per_image = nlohmann::json::array();
  for (const auto& s : report.per_image) {
    per_image.push_back({{"image_id", s.image_id}, {"dsc", s.dsc}, {"iou", s.iou}});
  }
  j = nlohmann::json{{"n_images", report.n_images},
                     {"mean_dsc", report.mean_dsc},
                     {"mean_iou", report.mean_iou},
                     {"mask_shape", to_string(report.mask_shape)},
                     {"threshold", report.threshold},
                     {"empty_mask_convention", "both empty = 1, one empty = 0"},
                     {"per_image", per_image}};
  if (report.roc) j["roc"] = *report.roc;
}

void from_json(const nlohmann::json& j, MetricsReport& report) {
  report.per_image.clear();
  for (const auto& s : j.at("per_image")) {
    report.per_image.push_back({s.at("image_id").get<std::string>(),
                                s.at("dsc").get<double>(), s.at("iou").get<double>()});
  }
  report.n_images = j.at("n_images").get<std::size_t>();
  report.mean_dsc = j.at("mean_dsc").get<double>();
  report.mean_iou = j.at("mean_iou").get<double>();
  report.mask_shape = parse_mask_shape(j.at("mask_shape").get<std::string>());
  report.threshold = j.value("threshold", 0.5);
  if (j.contains("roc")) {
    report.roc = j.at("roc").get<RocCurve>();
  } else {
    report.roc.reset();
  }
}

std::string format_fixed4(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", value);
  return buf;
}

std::string csv_row(const std::string& model, const std::string& split,
                    const MetricsReport& report) {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
      if (ch == '"') out += '"';
      out += ch;
    }
    return out + "\"";
  };
  return quote(model) + "," + quote(split) + "," + to_string(report.mask_shape) +
         "," + format_fixed4(report.mean_dsc) + "," + format_fixed4(report.mean_iou);
}

}  // namespace mfseg
