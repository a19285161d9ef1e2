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

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pstyle/autodiff.hpp"
#include "pstyle/finite_diff.hpp"

namespace pstyle {

// Builds a scalar loss from leaves holding the given inputs.
using GraphFn = std::function<Var(std::span<const Var> inputs)>;

struct GradCheckCase {
  std::string name;
  GraphFn fn;
  std::vector<Tensor> inputs;
  // Coordinates probed per input; empty means every coordinate.
  std::vector<std::vector<std::size_t>> coords;
};

struct GradCheckResult {
  std::string name;
  double worst_error = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<GradCheckResult> results;
  double tolerance = 0.0;

  bool all_passed() const;
  void print(std::ostream& os) const;
};

// Analytic vs central-difference gradients for every input of the case.
// Each input's error is max |a - n| over its probed coordinates divided by
// the larger of its own gradient scale and 1e-3 times the case-wide scale,
// so inputs whose true gradient is exactly zero are judged against the
// case's magnitude instead of finite-difference noise.
double check_gradients(const GradCheckCase& c, double h = kDefaultFiniteDiffStep);

// sum(x * R) for a fixed pseudo-random R derived from `seed` and x's shape;
// turns any op output into a scalar with a non-trivial upstream gradient.
Var random_projection(Var x, std::uint64_t seed);

// All op-level cases plus the attention block, fusion, decoder and the full
// training loss, drawn from `seed`. The full-loss case probes a few
// coordinates per parameter tensor, chosen where no ReLU kink lies within
// the finite-difference stencil.
std::vector<GradCheckCase> standard_gradcheck_cases(std::uint64_t seed);

GradCheckReport run_gradcheck(std::uint64_t seed, double tolerance = 1e-4);

}  // namespace pstyle
