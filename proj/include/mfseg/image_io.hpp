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

#ifndef MFSEG_IMAGE_IO_HPP_
#define MFSEG_IMAGE_IO_HPP_

#include <array>
#include <filesystem>
#include <stdexcept>

#include "mfseg/tensor.hpp"

namespace mfseg {

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Decodes an 8-bit image as grayscale intensities in [0, 255]. Multi-channel
// inputs are averaged over their colour channels.
Plane<float> read_gray8(const std::filesystem::path& path);

// Bilinear resize (pixel-centre aligned).
Plane<float> resize_bilinear(const Plane<float>& src, Index width, Index height);

// Values in [0, 1] are scaled by 255 and rounded.
void write_gray8(const std::filesystem::path& path, const Plane<float>& unit);

// Planes in R, G, B order, values in [0, 1].
void write_rgb8(const std::filesystem::path& path,
                const std::array<Plane<float>, 3>& unit_rgb);

}  // namespace mfseg

#endif  // MFSEG_IMAGE_IO_HPP_
