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

#include "mfseg/evalreport.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <sstream>
#include <tuple>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "mfseg/image_io.hpp"
#include "mfseg/trainer.hpp"

namespace mfseg {

MetricsReport evaluate(const Predictor& predictor, const std::vector<ImageTensor>& images,
                       const std::map<std::string, Plane<float>>& ground_truth,
                       MaskShape shape, double threshold, bool with_roc) {
  std::vector<LabeledImage> samples;
  std::vector<Plane<float>> maps;
  for (const auto& img : images) {
    const auto it = ground_truth.find(img.id);
    if (it == ground_truth.end()) {
      throw std::invalid_argument("no ground truth for image '" + img.id + "'");
    }
    samples.push_back({img.id, img.data, it->second});
    maps.push_back(predictor(img));
  }
  return score_maps(samples, maps, shape, threshold, with_roc);
}

MetricsReport evaluate(Model<float>& model, const std::vector<ImageTensor>& images,
                       const std::map<std::string, Plane<float>>& ground_truth,
                       MaskShape shape, double threshold, bool with_roc) {
  std::vector<LabeledImage> samples;
  for (const auto& img : images) {
    const auto it = ground_truth.find(img.id);
    if (it == ground_truth.end()) {
      throw std::invalid_argument("no ground truth for image '" + img.id + "'");
    }
    samples.push_back({img.id, img.data, it->second});
  }
  return evaluate_model(model, samples, shape, threshold, with_roc);
}

OverlayImage render_overlay(const ImageTensor& image, const MaskTensor& prediction) {
  const auto& src = image.data;
  const auto& mask = prediction.data;
  if (src.rows() != mask.rows() || src.cols() != mask.cols()) {
    throw std::invalid_argument("render_overlay: image and prediction dimensions differ");
  }
  OverlayImage out;
  out.source_id = image.id;
  const auto on = (mask == 1.0f);
  for (int c = 0; c < 3; ++c) {
    const Plane<float> tinted =
        (1.0f - kHighlightOpacity) * src + kHighlightOpacity * kHighlightRgb[static_cast<std::size_t>(c)];
    out.rgb[static_cast<std::size_t>(c)] = on.select(tinted, src);
  }
  return out;
}

void write_overlay(const OverlayImage& overlay, const std::filesystem::path& path) {
  write_rgb8(path, overlay.rgb);
}

std::string to_string(Split split) {
  return split == Split::kCvValidation ? "cv_val" : "test";
}

const std::vector<std::string>& canonical_model_order() {
  static const std::vector<std::string> order = {
      "U-Net",          "U-Net++",         "ResU-Net",
      "ResU-Net++",     "U-Net Attention", "FPN ResNet18",
      "FPN InceptionV3", "LinkNet ResNet18", "LinkNet InceptionV3"};
  return order;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

struct Row {
  std::optional<MetricsReport> cv;
  std::optional<MetricsReport> test;
};

}  // namespace

std::string results_table(const std::vector<TableEntry>& entries) {
  const auto& order = canonical_model_order();
  auto rank = [&](const std::string& model) {
    const auto it = std::find(order.begin(), order.end(), model);
    return static_cast<std::size_t>(it - order.begin());
  };
  // Key sorts round before square, then canonical rank, then name.
  using Key = std::tuple<int, std::size_t, std::string>;
  std::map<Key, Row> rows;
  for (const auto& e : entries) {
    const Key key{e.mask_shape == MaskShape::kRound ? 0 : 1, rank(e.model), e.model};
    auto& slot = e.split == Split::kCvValidation ? rows[key].cv : rows[key].test;
    if (slot) {
      throw DuplicateEntryError("duplicate results entry (" + e.model + ", " +
                                to_string(e.mask_shape) + ", " + to_string(e.split) + ")");
    }
    slot = e.report;
  }
  std::ostringstream os;
  os << kResultsHeader << "\r\n";
  for (const auto& [key, row] : rows) {
    const auto& model = std::get<2>(key);
    os << csv_field(model) << "," << (std::get<0>(key) == 0 ? "round" : "square");
    for (const auto* r : {&row.cv, &row.test}) {
      if (*r) {
        os << "," << format_fixed4((*r)->mean_dsc) << "," << format_fixed4((*r)->mean_iou);
      } else {
        os << ",,";
      }
    }
    os << "\r\n";
  }
  return os.str();
}

RocPlot plot_roc(const RocCurve& roc, const std::filesystem::path& out_path) {
  if (roc.points.empty()) throw std::invalid_argument("plot_roc: no ROC points");
  constexpr int kSize = 480;
  constexpr int kMargin = 60;
  constexpr int kSpan = kSize - 2 * kMargin;
  cv::Mat canvas(kSize, kSize, CV_8UC3, cv::Scalar(255, 255, 255));
  auto to_px = [&](double fpr, double tpr) {
    return cv::Point(kMargin + static_cast<int>(std::lround(fpr * kSpan)),
                     kSize - kMargin - static_cast<int>(std::lround(tpr * kSpan)));
  };
  const cv::Scalar black(0, 0, 0);
  const cv::Scalar grey(160, 160, 160);
  const cv::Scalar blue(200, 80, 0);  // BGR
  cv::rectangle(canvas, to_px(0, 1), to_px(1, 0), black, 1);
  for (int i = 0; i <= 10; ++i) {
    const double t = i / 10.0;
    cv::line(canvas, to_px(t, 0), to_px(t, 0) + cv::Point(0, 5), black, 1);
    cv::line(canvas, to_px(0, t), to_px(0, t) - cv::Point(5, 0), black, 1);
  }
  // Chance diagonal, dashed.
  for (int i = 0; i < 20; i += 2) {
    cv::line(canvas, to_px(i / 20.0, i / 20.0), to_px((i + 1) / 20.0, (i + 1) / 20.0), grey, 1,
             cv::LINE_AA);
  }
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    const auto& a = roc.points[i - 1];
    const auto& b = roc.points[i];
    cv::line(canvas, to_px(a.fpr, a.tpr), to_px(b.fpr, b.tpr), blue, 2, cv::LINE_AA);
  }
  char label[32];
  std::snprintf(label, sizeof(label), "AUC = %.3f", roc.auc);
  const int font = cv::FONT_HERSHEY_SIMPLEX;
  cv::putText(canvas, label, to_px(0.5, 0.1), font, 0.6, black, 1, cv::LINE_AA);
  cv::putText(canvas, "False positive rate", cv::Point(kSize / 2 - 80, kSize - 20), font, 0.5,
              black, 1, cv::LINE_AA);
  cv::Mat ylabel(30, 200, CV_8UC3, cv::Scalar(255, 255, 255));
  cv::putText(ylabel, "True positive rate", cv::Point(10, 20), font, 0.5, black, 1, cv::LINE_AA);
  cv::rotate(ylabel, ylabel, cv::ROTATE_90_COUNTERCLOCKWISE);
  ylabel.copyTo(canvas(cv::Rect(10, kSize / 2 - 100, ylabel.cols, ylabel.rows)));

  bool ok = false;
  try {
    ok = cv::imwrite(out_path.string(), canvas);
  } catch (const cv::Exception& e) {
    throw ImageIoError("cannot write " + out_path.string() + ": " + e.what());
  }
  if (!ok) throw ImageIoError("cannot write " + out_path.string());
  return {roc.points.size(), label};
}

}  // namespace mfseg
