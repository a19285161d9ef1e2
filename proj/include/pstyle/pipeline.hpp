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

#include <string>

#include "pstyle/image_io.hpp"
#include "pstyle/net_blocks.hpp"
#include "pstyle/segmentation.hpp"
#include "pstyle/style_attention.hpp"

namespace pstyle {

struct PassPreset {
  std::string name;
  FusionWeights fusion;
  std::string description;
};

// Style-dominant pass for the background: (w1 0.3, w2 1.0).
PassPreset background_preset();
// Content-dominant pass for the subject: (w1 1.0, w2 0.2).
PassPreset portrait_preset();

// One transfer pass. Content and style sides must be multiples of 8 (>= 16);
// gray inputs are expanded to RGB. Output has the content's size.
ImageBuffer stylize(const ImageBuffer& content, const ImageBuffer& style,
                    const FusionWeights& w, const Checkpoint& ckpt);

// mask * fg + (1 - mask) * bg per pixel and channel, clamped to [0, 1].
ImageBuffer composite(const ImageBuffer& bg, const ImageBuffer& fg,
                      const Mask& mask);

struct PortraitResult {
  ImageBuffer image;
  ImageBuffer background_pass;
  ImageBuffer portrait_pass;
};

// Stylizes the full frame twice (background and portrait presets) and
// composites through the (optionally feathered) mask.
PortraitResult portrait_stylize(const ImageBuffer& content,
                                const ImageBuffer& style, const Mask& mask,
                                const PassPreset& bg, const PassPreset& fg,
                                const Checkpoint& ckpt,
                                std::size_t feather_radius = 0);

}  // namespace pstyle
