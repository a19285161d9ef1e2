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
#include <functional>
#include <span>

#include "pstyle/tensor.hpp"

namespace pstyle {

using ScalarFn = std::function<double(const Tensor&)>;

inline constexpr double kDefaultFiniteDiffStep = 1e-5;

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
Tensor finite_diff_grad(const ScalarFn& f, const Tensor& x,
                        double h = kDefaultFiniteDiffStep);

// Same, restricted to the listed coordinates (others stay zero). Used where a
// full sweep over a large parameter tensor is too slow.
Tensor finite_diff_grad(const ScalarFn& f, const Tensor& x,
                        std::span<const std::size_t> coords,
                        double h = kDefaultFiniteDiffStep);

// max_i |a_i - n_i| / max(max_i |a_i|, max_i |n_i|); 0 when both vanish.
// Coordinates outside `coords` (when given) are ignored.
double gradient_relative_error(const Tensor& analytic, const Tensor& numeric);
double gradient_relative_error(const Tensor& analytic, const Tensor& numeric,
                               std::span<const std::size_t> coords);

}  // namespace pstyle
