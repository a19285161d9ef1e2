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

#include "pstyle/pipeline.hpp"

#include <algorithm>
#include <exception>

#include "pstyle/error.hpp"

namespace pstyle {

namespace {

ImageBuffer rgb(const ImageBuffer& img) {
  if (img.channels == 3) return img;
  ImageBuffer out(img.width, img.height, 3);
  for (std::size_t i = 0; i < img.width * img.height; ++i)
    for (std::size_t c = 0; c < 3; ++c) out.data[i * 3 + c] = img.data[i];
  return out;
}

void check_side(const ImageBuffer& img, const char* role) {
  if (img.width % 8 != 0 || img.height % 8 != 0 || img.width < 16 ||
      img.height < 16) {
    throw ShapeError(std::string(role) + " image is " + std::to_string(img.width) +
                     "x" + std::to_string(img.height) +
                     "; both sides must be multiples of 8 and at least 16");
  }
}

}  // namespace

PassPreset background_preset() {
  return {"background", {0.3, 1.0}, "style-dominant pass for the background"};
}

PassPreset portrait_preset() {
  return {"portrait", {1.0, 0.2}, "content-dominant pass for the subject"};
}

ImageBuffer stylize(const ImageBuffer& content, const ImageBuffer& style,
                    const FusionWeights& w, const Checkpoint& ckpt) {
  check_side(content, "content");
  check_side(style, "style");
  w.validate();
  Graph graph;
  Bindings params(graph, ckpt.params, false);
  Var out = transfer(params, graph.constant(to_tensor(rgb(content))),
                     graph.constant(to_tensor(rgb(style))), w);
  return from_tensor(out.value());
}

ImageBuffer composite(const ImageBuffer& bg, const ImageBuffer& fg,
                      const Mask& mask) {
  if (bg.width != fg.width || bg.height != fg.height ||
      bg.channels != fg.channels || mask.width != bg.width ||
      mask.height != bg.height) {
    throw ShapeError("composite needs equal sizes: background " +
                     std::to_string(bg.width) + "x" + std::to_string(bg.height) +
                     ", foreground " + std::to_string(fg.width) + "x" +
                     std::to_string(fg.height) + ", mask " +
                     std::to_string(mask.width) + "x" + std::to_string(mask.height));
  }
  ImageBuffer out(bg.width, bg.height, bg.channels);
  for (std::size_t p = 0; p < bg.width * bg.height; ++p) {
    const double m = mask.data[p];
    for (std::size_t c = 0; c < bg.channels; ++c) {
      const std::size_t i = p * bg.channels + c;
      out.data[i] = std::clamp(m * fg.data[i] + (1.0 - m) * bg.data[i], 0.0, 1.0);
    }
  }
  return out;
}

PortraitResult portrait_stylize(const ImageBuffer& content,
                                const ImageBuffer& style, const Mask& mask,
                                const PassPreset& bg, const PassPreset& fg,
                                const Checkpoint& ckpt,
                                std::size_t feather_radius) {
  if (mask.width != content.width || mask.height != content.height) {
    throw ShapeError("mask is " + std::to_string(mask.width) + "x" +
                     std::to_string(mask.height) + " but content is " +
                     std::to_string(content.width) + "x" +
                     std::to_string(content.height));
  }
  PortraitResult result;
  std::exception_ptr errors[2];
#pragma omp parallel sections
  {
#pragma omp section
    {
      try {
        result.background_pass = stylize(content, style, bg.fusion, ckpt);
      } catch (...) {
        errors[0] = std::current_exception();
      }
    }
#pragma omp section
    {
      try {
        result.portrait_pass = stylize(content, style, fg.fusion, ckpt);
      } catch (...) {
        errors[1] = std::current_exception();
      }
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  result.image = composite(result.background_pass, result.portrait_pass,
                           feather(mask, feather_radius));
  return result;
}

}  // namespace pstyle
