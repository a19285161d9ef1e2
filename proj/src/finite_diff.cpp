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

#include "pstyle/finite_diff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "pstyle/error.hpp"

namespace pstyle {

Tensor finite_diff_grad(const ScalarFn& f, const Tensor& x, double h) {
  std::vector<std::size_t> all(x.numel());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return finite_diff_grad(f, x, all, h);
}

Tensor finite_diff_grad(const ScalarFn& f, const Tensor& x,
                        std::span<const std::size_t> coords, double h) {
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i : coords) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = f(probe);
    probe[i] = orig - h;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double gradient_relative_error(const Tensor& analytic, const Tensor& numeric) {
  std::vector<std::size_t> all(analytic.numel());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return gradient_relative_error(analytic, numeric, all);
}

double gradient_relative_error(const Tensor& analytic, const Tensor& numeric,
                               std::span<const std::size_t> coords) {
  if (analytic.shape() != numeric.shape()) {
    throw ShapeError("gradient shapes differ: " + shape_str(analytic.shape()) +
                     " vs " + shape_str(numeric.shape()));
  }
  double diff = 0.0, scale = 0.0;
  for (std::size_t i : coords) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  if (scale == 0.0) return 0.0;
  return diff / scale;
}

}  // namespace pstyle
