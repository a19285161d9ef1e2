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
#include <string_view>
#include <vector>

#include "pstyle/image_io.hpp"

namespace pstyle {

// Single-channel subject mask in [0, 1]; 1 marks the person.
struct Mask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> data;

  Mask() = default;
  Mask(std::size_t w, std::size_t h, double fill = 0.0)
      : width(w), height(h), data(w * h, fill) {}

  double& at(std::size_t x, std::size_t y) { return data[y * width + x]; }
  double at(std::size_t x, std::size_t y) const { return data[y * width + x]; }

  friend bool operator==(const Mask&, const Mask&) = default;
};

inline constexpr std::uint8_t kDefaultMaskThreshold = 128;

// Gray image -> binary mask: byte >= threshold is subject.
Mask mask_from_image(const ImageBuffer& gray,
                     std::uint8_t threshold = kDefaultMaskThreshold);
// Reads a grayscale PNG/PGM; RGB files are rejected.
Mask load_mask(const std::filesystem::path& path,
               std::uint8_t threshold = kDefaultMaskThreshold);
ImageBuffer mask_to_image(const Mask& mask);

enum class SegmentMethod { kCenterEllipse, kLumaThreshold };

SegmentMethod parse_segment_method(std::string_view name);

struct SegmentParams {
  // Inclusive Rec.601 luma range marked as subject (luma_threshold only).
  double luma_min = 0.0;
  double luma_max = 1.0;
};

// center_ellipse: pixel centers inside the axis-aligned ellipse centred at
// (W/2, 0.55 H) with semi-axes (0.28 W, 0.38 H).
Mask trivial_segment(const ImageBuffer& img, SegmentMethod method,
                     const SegmentParams& params = {});

struct BoundingBox {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t width = 0;
  std::size_t height = 0;

  bool contains(std::size_t px, std::size_t py) const {
    return px >= x && px < x + width && py >= y && py < y + height;
  }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct MaskCrop {
  ImageBuffer fragment;
  BoundingBox box;
};

// Tight box around mask == 1, grown to an 8-aligned rectangle of at least
// 16x16 inside the image, plus the fragment it encloses.
MaskCrop crop_by_mask(const ImageBuffer& img, const Mask& mask);

// radius r applies a 3x3 box blur r times (edge-replicated borders).
Mask feather(const Mask& mask, std::size_t radius);

}  // namespace pstyle
