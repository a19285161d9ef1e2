// Copyright 2026 The pstyle Authors.
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "pstyle/tensor.hpp"

namespace pstyle {

// Decoded raster with channel values in [0, 1], row-major and
// channel-interleaved. channels is 3 (RGB) or 1 (gray).
struct ImageBuffer {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 3;
  std::vector<double> data;

  ImageBuffer() = default;
  ImageBuffer(std::size_t w, std::size_t h, std::size_t c, double fill = 0.0)
      : width(w), height(h), channels(c), data(w * h * c, fill) {}

  double& at(std::size_t x, std::size_t y, std::size_t c) {
    return data[(y * width + x) * channels + c];
  }
  double at(std::size_t x, std::size_t y, std::size_t c) const {
    return data[(y * width + x) * channels + c];
  }

  // Throws ShapeError on a size mismatch or a value outside [0, 1].
  void validate() const;

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

enum class ImageFormat { kPng, kPpm, kPgm };

// PNG (8-bit gray/RGB, non-interlaced), PPM P6 or PGM P5, picked by magic
// bytes. Bytes map to v / 255.
ImageBuffer read_image(const std::filesystem::path& path);
ImageBuffer decode_image(const std::vector<std::uint8_t>& bytes);

// Values map to round-half-up(v * 255) clamped to [0, 255]. PPM needs RGB,
// PGM needs gray.
void write_image(const ImageBuffer& img, const std::filesystem::path& path,
                 ImageFormat format);
std::vector<std::uint8_t> encode_image(const ImageBuffer& img,
                                       ImageFormat format);

// Picks the format from the extension (.png, .ppm, .pgm).
ImageFormat format_for_path(const std::filesystem::path& path);

std::uint8_t to_byte(double v);

// [1, C, H, W] channel-planar tensor.
Tensor to_tensor(const ImageBuffer& img);
// Inverse of to_tensor; values are clamped to [0, 1].
ImageBuffer from_tensor(const Tensor& t);

}  // namespace pstyle
