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
#include <string>

#include "pstyle/net_blocks.hpp"

namespace pstyle {

// Query (f), key (g) and value (h) 1x1 convolutions for C channels.
// f and g map C -> C/2, h maps C -> C.
struct AttentionBlock {
  Var f_weight, f_bias;
  Var g_weight, g_bias;
  Var h_weight, h_bias;
  std::size_t channels = 0;

  // Binds "<prefix>.f.weight" etc.
  static AttentionBlock bind(const Bindings& params, const std::string& prefix);
};

// Row-stochastic attention map [Hc*Wc, Hs*Ws]: softmax over style positions
// of normalized query/key products.
Var attention_map(const AttentionBlock& block, Var content_feat, Var style_feat);

// Attention-weighted style values reshaped to the content layout, plus the
// content features as a residual. Output shape equals content_feat's shape.
Var sanet_attend(const AttentionBlock& block, Var content_feat, Var style_feat);

// Importance of the low-level (w1) and high-level (w2) attention outputs.
struct FusionWeights {
  double w1 = 1.0;
  double w2 = 1.0;

  // Throws ConfigError unless both are finite, non-negative and not both 0.
  void validate() const;
};

// res = low * w1 + proj(upsample2(high)) * w2, where proj is the 1x1 conv
// mapping the high-level channel count onto the low-level one.
Var fuse_levels(Var low, Var high, Var proj_weight, Var proj_bias,
                const FusionWeights& w);

// Content/style images [1,3,H,W] -> stylized image [1,3,H,W]:
// decode(merge(fuse(attend(f4), attend(f5)))).
Var transfer(const Bindings& params, Var content, Var style,
             const FusionWeights& w);

}  // namespace pstyle
