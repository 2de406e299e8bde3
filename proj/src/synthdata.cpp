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

#include "mfseg/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mfseg/image_io.hpp"
#include "mfseg/maskgen.hpp"
#include "mfseg/random.hpp"

namespace mfseg {

std::string to_string(BackgroundProfile profile) {
  return profile == BackgroundProfile::kFlat ? "flat" : "jaw_arc";
}

BackgroundProfile parse_background_profile(const std::string& text) {
  if (text == "flat") return BackgroundProfile::kFlat;
  if (text == "jaw_arc") return BackgroundProfile::kJawArc;
  throw std::invalid_argument("unknown background profile '" + text + "'");
}

namespace {

struct IntRange {
  Index lo;
  Index hi;
};

IntRange band(double lo, double hi, Index size) {
  return {static_cast<Index>(std::ceil(lo * static_cast<double>(size))),
          static_cast<Index>(std::floor(hi * static_cast<double>(size)))};
}

Index pick(Rng& rng, IntRange r) {
  return r.lo + static_cast<Index>(rng.below(static_cast<std::uint64_t>(r.hi - r.lo + 1)));
}

std::string synthetic_id(std::size_t index, std::size_t count) {
  const int width = std::max(4, static_cast<int>(std::to_string(count - 1).size()));
  char buf[32];
  std::snprintf(buf, sizeof(buf), "syn%0*zu", width, index);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (count < 1) throw std::invalid_argument("count must be >= 1");
  if (dims.width < 1 || dims.height < 1) throw std::invalid_argument("dims must be positive");
  if (!(extent_min > 0.0 && extent_min <= extent_max)) {
    throw std::invalid_argument("need 0 < extent_min <= extent_max");
  }
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be >= 0");
  const double w = static_cast<double>(dims.width);
  const double h = static_cast<double>(dims.height);
  const IntRange xl = band(kLeftBandLo, kLeftBandHi, dims.width);
  const IntRange xr = band(kRightBandLo, kRightBandHi, dims.width);
  const IntRange y = band(kVerticalBandLo, kVerticalBandHi, dims.height);
  if (xl.lo > xl.hi || xr.lo > xr.hi || y.lo > y.hi) {
    throw std::invalid_argument("target placement infeasible: " + to_string(dims) +
                                " is too small to place targets");
  }
  if (!(extent_max < (0.5 - kLeftBandHi) * w && extent_max <= (1.0 - kVerticalBandHi) * h)) {
    throw std::invalid_argument("target placement infeasible: extent " +
                                std::to_string(extent_max) + " does not fit " +
                                to_string(dims));
  }
}

double synthetic_background(const SynthConfig& config, double x, double y) {
  const double w = static_cast<double>(config.dims.width);
  const double h = static_cast<double>(config.dims.height);
  // Gentle top-to-bottom shading.
  double v = 0.22 + 0.06 * y / h;
  if (config.profile == BackgroundProfile::kJawArc) {
    const double u = (x - 0.5 * w) / (0.5 * w);
    const double centre = h * (0.9 - 0.45 * u * u);
    const double d = (y - centre) / (0.14 * h);
    v += 0.3 * std::exp(-0.5 * d * d);
  }
  return v;
}

SyntheticDataset generate_synthetic_opg(const SynthConfig& config) {
  config.validate();
  SyntheticDataset out;
  out.manifest.image_dims = config.dims;
  const Index w = config.dims.width;
  const Index h = config.dims.height;
  const IntRange xl = band(kLeftBandLo, kLeftBandHi, w);
  const IntRange xr = band(kRightBandLo, kRightBandHi, w);
  const IntRange yb = band(kVerticalBandLo, kVerticalBandHi, h);

  Plane<float> background(h, w);
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      background(y, x) = static_cast<float>(
          synthetic_background(config, static_cast<double>(x), static_cast<double>(y)));
    }
  }

  for (std::size_t i = 0; i < config.count; ++i) {
    Rng rng(derive_seed(config.seed, Stream::kSynth, i));
    ManifestEntry entry;
    entry.id = synthetic_id(i, config.count);
    entry.image = "images/" + entry.id + ".png";
    entry.image_path = entry.image;
    entry.annotation.image_id = entry.id;

    Plane<double> img = background.cast<double>();
    for (Side side : {Side::kLeft, Side::kRight}) {
      Landmark lm;
      lm.side = side;
      lm.cx = static_cast<double>(pick(rng, side == Side::kLeft ? xl : xr));
      lm.cy = static_cast<double>(pick(rng, yb));
      const double extent = rng.uniform(config.extent_min, config.extent_max);
      lm.extent = extent;
      // extent = 2 sigma; mild ellipticity keeps the wells from being perfect discs.
      const double stretch = 1.0 + 0.1 * rng.uniform(-1.0, 1.0);
      const double sx = 0.5 * extent * stretch;
      const double sy = 0.5 * extent / stretch;
      for (Index y = 0; y < h; ++y) {
        const double dy = (static_cast<double>(y) - lm.cy) / sy;
        for (Index x = 0; x < w; ++x) {
          const double dx = (static_cast<double>(x) - lm.cx) / sx;
          img(y, x) -= kWellDepth * std::exp(-0.5 * (dx * dx + dy * dy));
        }
      }
      entry.annotation.landmarks.push_back(lm);
    }
    if (config.noise_sigma > 0.0) {
      for (Index y = 0; y < h; ++y) {
        for (Index x = 0; x < w; ++x) img(y, x) += config.noise_sigma * rng.normal();
      }
    }
    ImageTensor tensor;
    tensor.id = entry.id;
    tensor.data = ((img.max(0.0).min(1.0) * 255.0).round() / 255.0).cast<float>();
    out.images.push_back(std::move(tensor));
    out.manifest.entries.push_back(std::move(entry));
  }
  return out;
}

std::filesystem::path write_synthetic(const SyntheticDataset& data,
                                      const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  for (const auto& img : data.images) write_gray8(dir / "images" / (img.id + ".png"), img.data);
  const auto path = dir / "manifest.json";
  save_manifest(data.manifest, path);
  return path;
}

std::vector<LabeledImage> labeled_in_memory(const SyntheticDataset& data,
                                            MaskShape shape, double default_extent) {
  const MaskSpec spec{shape, default_extent};
  std::vector<LabeledImage> out;
  out.reserve(data.images.size());
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    const auto& entry = data.manifest.entries[i];
    out.push_back({entry.id, data.images[i].data,
                   render_mask(entry.annotation, data.manifest.image_dims, spec).data});
  }
  return out;
}

void to_json(nlohmann::json& j, const SynthConfig& config) {
  j = nlohmann::json{{"count", config.count},
                     {"dims", {config.dims.width, config.dims.height}},
                     {"seed", config.seed},
                     {"extent_range", {config.extent_min, config.extent_max}},
                     {"noise_sigma", config.noise_sigma},
                     {"background_profile", to_string(config.profile)}};
}

}  // namespace mfseg
