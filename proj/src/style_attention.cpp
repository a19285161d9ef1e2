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

#include "pstyle/style_attention.hpp"

#include <cmath>

#include "pstyle/error.hpp"

namespace pstyle {

namespace {

// [1,C,H,W] -> [H*W, C]
Var positions_by_channels(Var x) {
  const Shape& s = x.shape();
  return transpose(reshape(x, {s[1], s[2] * s[3]}));
}

void check_features(const AttentionBlock& block, Var feat, const char* role) {
  const Shape& s = feat.shape();
  if (s.size() != 4 || s[0] != 1) {
    throw ShapeError(std::string("attention ") + role +
                     " features must be [1,C,H,W], got " + shape_str(s));
  }
  if (s[1] != block.channels) {
    throw ShapeError(std::string("attention ") + role + " features have " +
                     std::to_string(s[1]) + " channels, block expects " +
                     std::to_string(block.channels));
  }
}

}  // namespace

AttentionBlock AttentionBlock::bind(const Bindings& params,
                                    const std::string& prefix) {
  AttentionBlock b;
  b.f_weight = params(prefix + ".f.weight");
  b.f_bias = params(prefix + ".f.bias");
  b.g_weight = params(prefix + ".g.weight");
  b.g_bias = params(prefix + ".g.bias");
  b.h_weight = params(prefix + ".h.weight");
  b.h_bias = params(prefix + ".h.bias");
  b.channels = b.h_weight.shape()[1];
  return b;
}

Var attention_map(const AttentionBlock& block, Var content_feat, Var style_feat) {
  check_features(block, content_feat, "content");
  check_features(block, style_feat, "style");
  Var query = positions_by_channels(
      conv2d(instance_norm(content_feat), block.f_weight, block.f_bias));
  Var key = positions_by_channels(
      conv2d(instance_norm(style_feat), block.g_weight, block.g_bias));
  return softmax_rows(matmul(query, transpose(key)));
}

Var sanet_attend(const AttentionBlock& block, Var content_feat, Var style_feat) {
  Var attn = attention_map(block, content_feat, style_feat);
  Var value = positions_by_channels(
      conv2d(style_feat, block.h_weight, block.h_bias));
  const Shape& cs = content_feat.shape();
  Var mixed = reshape(transpose(matmul(attn, value)), cs);
  return add(mixed, content_feat);
}

void FusionWeights::validate() const {
  if (!std::isfinite(w1) || !std::isfinite(w2) || w1 < 0.0 || w2 < 0.0) {
    throw ConfigError("fusion weights must be finite and non-negative, got (" +
                      std::to_string(w1) + ", " + std::to_string(w2) + ")");
  }
  if (w1 == 0.0 && w2 == 0.0) {
    throw ConfigError("fusion weights must not both be zero");
  }
}

Var fuse_levels(Var low, Var high, Var proj_weight, Var proj_bias,
                const FusionWeights& w) {
  w.validate();
  const Shape& ls = low.shape();
  const Shape& hs = high.shape();
  if (ls.size() != 4 || hs.size() != 4 || ls[0] != hs[0] ||
      ls[2] != 2 * hs[2] || ls[3] != 2 * hs[3]) {
    throw ShapeError("fuse_levels needs the high level at half the low-level "
                     "resolution, got " + shape_str(ls) + " and " + shape_str(hs));
  }
  Var projected = conv2d(upsample_nearest(high, 2), proj_weight, proj_bias);
  return add(scale(low, w.w1), scale(projected, w.w2));
}

Var transfer(const Bindings& params, Var content, Var style,
             const FusionWeights& w) {
  const FeaturePyramid fc = encode(params, content);
  const FeaturePyramid fs = encode(params, style);
  const auto block4 = AttentionBlock::bind(params, "attn4");
  const auto block5 = AttentionBlock::bind(params, "attn5");
  Var low = sanet_attend(block4, fc.f4(), fs.f4());
  Var high = sanet_attend(block5, fc.f5(), fs.f5());
  Var res = fuse_levels(low, high, params("fusion.proj.weight"),
                        params("fusion.proj.bias"), w);
  Var merged = conv2d(res, params("fusion.merge.weight"),
                      params("fusion.merge.bias"), {1, 1, PadMode::kReflect});
  return decode(params, merged);
}

}  // namespace pstyle
