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

#include "pstyle/autodiff.hpp"

// Differentiable operations. Each records one or more nodes in the graph of
// its inputs and returns the output handle.
namespace pstyle {

enum class PadMode { kZero, kReflect };

struct ConvOptions {
  std::size_t stride = 1;
  std::size_t pad = 0;
  PadMode mode = PadMode::kZero;
};

inline constexpr double kDefaultNormEps = 1e-5;

// Spatial padding of an N,C,H,W tensor. Reflect mirrors without repeating the
// edge pixel and needs pad < H and pad < W.
Var pad2d(Var x, std::size_t pad, PadMode mode);

// Cross-correlation (no kernel flip). kernel is [O,C,kH,kW], bias is [O].
// The output size (H + 2*pad - kH) / stride + 1 must divide exactly.
Var conv2d(Var x, Var kernel, Var bias, const ConvOptions& opts = {});

// Gradient at exactly 0 is 0.
Var relu(Var x);

// Per (n, c) plane: (x - mean) / sqrt(var + eps), population variance, no
// affine terms.
Var instance_norm(Var x, double eps = kDefaultNormEps);

// Row-wise softmax of a 2-D tensor with max subtraction.
Var softmax_rows(Var m);

Var matmul(Var a, Var b);
Var transpose(Var m);
Var reshape(Var x, Shape shape);

// Nearest-neighbour upsampling of an N,C,H,W tensor by an integer factor.
Var upsample_nearest(Var x, std::size_t factor);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);

// Sum of all elements, shape [1].
Var sum(Var x);

// Euclidean norm over all elements, shape [1]. The gradient at a zero input
// is defined as zero.
Var l2_norm(Var x);

// Per (n, c) plane statistics of an N,C,H,W tensor, shape [N, C].
Var channel_mean(Var x);
// sqrt(population variance + eps)
Var channel_std(Var x, double eps = kDefaultNormEps);

}  // namespace pstyle
