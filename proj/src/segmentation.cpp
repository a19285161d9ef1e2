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

#include "pstyle/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pstyle/error.hpp"

namespace pstyle {

namespace {

// [lo, hi) -> 8-aligned span of length >= 16 inside [0, dim).
std::pair<std::size_t, std::size_t> align_span(std::size_t lo, std::size_t hi,
                                               std::size_t dim) {
  std::size_t a = lo / 8 * 8;
  std::size_t b = (hi + 7) / 8 * 8;
  if (b - a < 16) b = a + 16;
  if (b > dim) {
    const std::size_t excess = b - dim;
    if (excess > a) {
      throw ShapeError("image dimension " + std::to_string(dim) +
                       " is too small for an 8-aligned crop of the subject");
    }
    a -= excess;
    b = dim;
  }
  if (a > lo || b < hi) {
    throw ShapeError("subject does not fit an 8-aligned crop of this image");
  }
  return {a, b};
}

}  // namespace

Mask mask_from_image(const ImageBuffer& gray, std::uint8_t threshold) {
  if (gray.channels != 1) {
    throw FormatError("mask must be a single-channel grayscale image; convert "
                      "the RGB mask to grayscale first");
  }
  Mask mask(gray.width, gray.height);
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    mask.data[i] = to_byte(gray.data[i]) >= threshold ? 1.0 : 0.0;
  }
  return mask;
}

Mask load_mask(const std::filesystem::path& path, std::uint8_t threshold) {
  const ImageBuffer img = read_image(path);
  if (img.channels != 1) {
    throw FormatError(path.string() +
                      ": mask must be grayscale (PGM P5 or gray PNG); convert "
                      "the RGB image to grayscale first");
  }
  return mask_from_image(img, threshold);
}

ImageBuffer mask_to_image(const Mask& mask) {
  ImageBuffer img(mask.width, mask.height, 1);
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    img.data[i] = std::clamp(mask.data[i], 0.0, 1.0);
  }
  return img;
}

SegmentMethod parse_segment_method(std::string_view name) {
  if (name == "center_ellipse") return SegmentMethod::kCenterEllipse;
  if (name == "luma_threshold") return SegmentMethod::kLumaThreshold;
  throw ConfigError("unknown segmentation method '" + std::string(name) +
                    "' (expected center_ellipse or luma_threshold)");
}

Mask trivial_segment(const ImageBuffer& img, SegmentMethod method,
                     const SegmentParams& params) {
  Mask mask(img.width, img.height);
  const double w = static_cast<double>(img.width);
  const double h = static_cast<double>(img.height);
  const double cx = w / 2.0, cy = 0.55 * h;
  const double ax = 0.28 * w, ay = 0.38 * h;
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      bool inside = false;
      if (method == SegmentMethod::kCenterEllipse) {
        const double dx = (static_cast<double>(x) + 0.5 - cx) / ax;
        const double dy = (static_cast<double>(y) + 0.5 - cy) / ay;
        inside = dx * dx + dy * dy <= 1.0;
      } else {
        double luma = img.at(x, y, 0);
        if (img.channels == 3) {
          luma = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
                 0.114 * img.at(x, y, 2);
        }
        inside = luma >= params.luma_min && luma <= params.luma_max;
      }
      mask.at(x, y) = inside ? 1.0 : 0.0;
    }
  }
  return mask;
}

MaskCrop crop_by_mask(const ImageBuffer& img, const Mask& mask) {
  if (img.width != mask.width || img.height != mask.height) {
    throw ShapeError("mask is " + std::to_string(mask.width) + "x" +
                     std::to_string(mask.height) + " but image is " +
                     std::to_string(img.width) + "x" + std::to_string(img.height));
  }
  std::size_t x0 = mask.width, y0 = mask.height, x1 = 0, y1 = 0;
  for (std::size_t y = 0; y < mask.height; ++y)
    for (std::size_t x = 0; x < mask.width; ++x)
      if (mask.at(x, y) >= 0.5) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x + 1);
        y1 = std::max(y1, y + 1);
      }
  if (x1 == 0) throw ShapeError("no subject region");

  const auto [bx0, bx1] = align_span(x0, x1, img.width);
  const auto [by0, by1] = align_span(y0, y1, img.height);
  MaskCrop out;
  out.box = {bx0, by0, bx1 - bx0, by1 - by0};
  out.fragment = ImageBuffer(out.box.width, out.box.height, img.channels);
  for (std::size_t y = 0; y < out.box.height; ++y)
    for (std::size_t x = 0; x < out.box.width; ++x)
      for (std::size_t c = 0; c < img.channels; ++c) {
        out.fragment.at(x, y, c) = img.at(bx0 + x, by0 + y, c);
      }
  return out;
}

Mask feather(const Mask& mask, std::size_t radius) {
  Mask cur = mask;
  const auto w = static_cast<std::ptrdiff_t>(mask.width);
  const auto h = static_cast<std::ptrdiff_t>(mask.height);
  for (std::size_t pass = 0; pass < radius; ++pass) {
    Mask next(mask.width, mask.height);
    for (std::ptrdiff_t y = 0; y < h; ++y)
      for (std::ptrdiff_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::ptrdiff_t dy = -1; dy <= 1; ++dy)
          for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
            const auto sx = std::clamp<std::ptrdiff_t>(x + dx, 0, w - 1);
            const auto sy = std::clamp<std::ptrdiff_t>(y + dy, 0, h - 1);
            acc += cur.data[static_cast<std::size_t>(sy * w + sx)];
          }
        next.data[static_cast<std::size_t>(y * w + x)] =
            std::clamp(acc / 9.0, 0.0, 1.0);
      }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace pstyle
