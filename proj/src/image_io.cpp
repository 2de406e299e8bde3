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

#include "mfseg/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace mfseg {
namespace {

cv::Mat to_mat(const Plane<float>& p) {
  cv::Mat m(static_cast<int>(p.rows()), static_cast<int>(p.cols()), CV_32F);
  for (int y = 0; y < m.rows; ++y) {
    for (int x = 0; x < m.cols; ++x) m.at<float>(y, x) = p(y, x);
  }
  return m;
}

Plane<float> from_mat(const cv::Mat& m) {
  Plane<float> p(m.rows, m.cols);
  for (int y = 0; y < m.rows; ++y) {
    for (int x = 0; x < m.cols; ++x) p(y, x) = m.at<float>(y, x);
  }
  return p;
}

unsigned char to_byte(float unit) {
  const float v = std::round(std::clamp(unit, 0.0f, 1.0f) * 255.0f);
  return static_cast<unsigned char>(v);
}

void write_or_throw(const std::filesystem::path& path, const cv::Mat& m) {
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), m);
  } catch (const cv::Exception& e) {
    throw ImageIoError("cannot write " + path.string() + ": " + e.what());
  }
  if (!ok) throw ImageIoError("cannot write " + path.string());
}

}  // namespace

Plane<float> read_gray8(const std::filesystem::path& path) {
  cv::Mat raw;
  try {
    raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    throw ImageIoError("cannot decode " + path.string() + ": " + e.what());
  }
  if (raw.empty()) throw ImageIoError("cannot decode " + path.string());
  if (raw.depth() != CV_8U) {
    throw ImageIoError(path.string() + " is not an 8-bit image");
  }
  cv::Mat as_float;
  raw.convertTo(as_float, CV_32F);
  const int colour = std::min(raw.channels(), 3);
  std::vector<cv::Mat> channels;
  cv::split(as_float, channels);
  cv::Mat gray = channels[0].clone();
  for (int c = 1; c < colour; ++c) gray += channels[c];
  gray /= static_cast<float>(colour);
  return from_mat(gray);
}

Plane<float> resize_bilinear(const Plane<float>& src, Index width, Index height) {
  if (src.cols() == width && src.rows() == height) return src;
  cv::Mat out;
  cv::resize(to_mat(src), out, cv::Size(static_cast<int>(width), static_cast<int>(height)),
             0, 0, cv::INTER_LINEAR);
  return from_mat(out);
}

void write_gray8(const std::filesystem::path& path, const Plane<float>& unit) {
  cv::Mat m(static_cast<int>(unit.rows()), static_cast<int>(unit.cols()), CV_8U);
  for (int y = 0; y < m.rows; ++y) {
    for (int x = 0; x < m.cols; ++x) m.at<unsigned char>(y, x) = to_byte(unit(y, x));
  }
  write_or_throw(path, m);
}

void write_rgb8(const std::filesystem::path& path,
                const std::array<Plane<float>, 3>& unit_rgb) {
  const auto& r = unit_rgb[0];
  cv::Mat m(static_cast<int>(r.rows()), static_cast<int>(r.cols()), CV_8UC3);
  for (int y = 0; y < m.rows; ++y) {
    for (int x = 0; x < m.cols; ++x) {
      // OpenCV stores BGR.
      m.at<cv::Vec3b>(y, x) = cv::Vec3b(to_byte(unit_rgb[2](y, x)),
                                        to_byte(unit_rgb[1](y, x)),
                                        to_byte(unit_rgb[0](y, x)));
    }
  }
  write_or_throw(path, m);
}

}  // namespace mfseg
