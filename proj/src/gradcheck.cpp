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

#include "pstyle/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

#include "pstyle/losses.hpp"
#include "pstyle/net_blocks.hpp"
#include "pstyle/ops.hpp"
#include "pstyle/style_attention.hpp"

namespace pstyle {

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double stddev = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

Tensor random_uniform(Shape shape, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

struct Evaluated {
  double loss = 0.0;
  std::vector<Tensor> grads;
};

Evaluated evaluate(const GraphFn& fn, const std::vector<Tensor>& inputs,
                   bool with_grad) {
  Graph graph;
  std::vector<Var> leaves;
  leaves.reserve(inputs.size());
  for (const Tensor& t : inputs) leaves.push_back(graph.leaf(t, with_grad));
  Var loss = fn(leaves);
  Evaluated out;
  out.loss = loss.value()[0];
  if (with_grad) {
    graph.backward(loss);
    for (const Var& v : leaves) out.grads.push_back(graph.grad(v));
  }
  return out;
}

// Draws `count` coordinates of input `i` at which the loss is smooth across
// the central-difference stencil. A ReLU kink inside [x - h, x + h] makes the
// central differences at h and h/2 disagree by a sizeable fraction of the
// slope; on smooth stretches they agree to O(h^2) (observed below 1e-7
// relative). Kinked draws are replaced; after kMaxDraws the last is kept.
std::vector<std::size_t> smooth_coords(const GraphFn& fn,
                                       const std::vector<Tensor>& inputs,
                                       std::size_t i, std::size_t count,
                                       std::mt19937_64& rng, double h) {
  constexpr int kMaxDraws = 16;
  const std::size_t numel = inputs[i].numel();
  const auto central = [&](std::size_t k, double step) {
    std::vector<Tensor> args = inputs;
    args[i][k] = inputs[i][k] + step;
    const double up = evaluate(fn, args, false).loss;
    args[i][k] = inputs[i][k] - step;
    return (up - evaluate(fn, args, false).loss) / (2.0 * step);
  };
  std::uniform_int_distribution<std::size_t> pick(0, numel - 1);
  std::vector<std::size_t> out;
  while (out.size() < std::min(count, numel)) {
    std::size_t k = 0;
    for (int draw = 0; draw < kMaxDraws; ++draw) {
      k = pick(rng);
      if (std::find(out.begin(), out.end(), k) != out.end()) continue;
      const double full = central(k, h);
      const double half = central(k, h / 2);
      if (std::abs(full - half) <= 1e-6 * std::max({std::abs(full), std::abs(half), 1e-12})) {
        break;
      }
    }
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
  }
  return out;
}

}  // namespace

double check_gradients(const GradCheckCase& c, double h) {
  const Evaluated analytic = evaluate(c.fn, c.inputs, true);

  std::vector<Tensor> numeric;
  std::vector<std::vector<std::size_t>> coords;
  for (std::size_t i = 0; i < c.inputs.size(); ++i) {
    std::vector<std::size_t> probe =
        (i < c.coords.size() && !c.coords[i].empty()) ? c.coords[i]
                                                      : std::vector<std::size_t>();
    if (probe.empty()) {
      probe.resize(c.inputs[i].numel());
      std::iota(probe.begin(), probe.end(), std::size_t{0});
    }
    const ScalarFn f = [&](const Tensor& x) {
      std::vector<Tensor> args = c.inputs;
      args[i] = x;
      return evaluate(c.fn, args, false).loss;
    };
    numeric.push_back(finite_diff_grad(f, c.inputs[i], probe, h));
    coords.push_back(std::move(probe));
  }

  double case_scale = 0.0;
  std::vector<double> diffs(c.inputs.size()), scales(c.inputs.size());
  for (std::size_t i = 0; i < c.inputs.size(); ++i) {
    for (std::size_t k : coords[i]) {
      const double a = analytic.grads[i][k];
      const double n = numeric[i][k];
      diffs[i] = std::max(diffs[i], std::abs(a - n));
      scales[i] = std::max({scales[i], std::abs(a), std::abs(n)});
    }
    case_scale = std::max(case_scale, scales[i]);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < c.inputs.size(); ++i) {
    const double denom = std::max(scales[i], 1e-3 * case_scale);
    if (denom > 0.0) worst = std::max(worst, diffs[i] / denom);
  }
  return worst;
}

Var random_projection(Var x, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ std::hash<std::string>{}(shape_str(x.shape())));
  Var weights = x.graph().constant(random_tensor(x.shape(), rng));
  return sum(mul(x, weights));
}

std::vector<GradCheckCase> standard_gradcheck_cases(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::uint64_t proj = seed * 7919 + 17;
  std::vector<GradCheckCase> cases;

  cases.push_back({"conv2d",
                   [proj](std::span<const Var> in) {
                     return random_projection(conv2d(in[0], in[1], in[2], {1, 1}), proj);
                   },
                   {random_tensor({2, 2, 5, 5}, rng), random_tensor({3, 2, 3, 3}, rng),
                    random_tensor({3}, rng)},
                   {}});
  cases.push_back({"conv2d_reflect_stride2",
                   [proj](std::span<const Var> in) {
                     return random_projection(
                         conv2d(in[0], in[1], in[2], {2, 1, PadMode::kReflect}), proj);
                   },
                   {random_tensor({1, 2, 6, 6}, rng), random_tensor({2, 2, 4, 4}, rng),
                    random_tensor({2}, rng)},
                   {}});

  Tensor relu_in = random_tensor({3, 4}, rng);
  for (double& v : relu_in.data()) {
    if (std::abs(v) < 1e-2) v = v < 0 ? -0.5 : 0.5;
  }
  cases.push_back({"relu",
                   [proj](std::span<const Var> in) {
                     return random_projection(relu(in[0]), proj);
                   },
                   {relu_in},
                   {}});
  cases.push_back({"instance_norm",
                   [proj](std::span<const Var> in) {
                     return random_projection(instance_norm(in[0]), proj);
                   },
                   {random_tensor({2, 3, 3, 4}, rng)},
                   {}});
  cases.push_back({"softmax_rows",
                   [proj](std::span<const Var> in) {
                     return random_projection(softmax_rows(in[0]), proj);
                   },
                   {random_tensor({4, 7}, rng)},
                   {}});
  cases.push_back({"matmul",
                   [proj](std::span<const Var> in) {
                     return random_projection(matmul(in[0], in[1]), proj);
                   },
                   {random_tensor({5, 4}, rng), random_tensor({4, 6}, rng)},
                   {}});
  cases.push_back({"upsample_nearest",
                   [proj](std::span<const Var> in) {
                     return random_projection(upsample_nearest(in[0], 2), proj);
                   },
                   {random_tensor({1, 2, 3, 3}, rng)},
                   {}});
  cases.push_back({"l2_norm",
                   [](std::span<const Var> in) { return l2_norm(in[0]); },
                   {random_tensor({2, 5}, rng)},
                   {}});
  cases.push_back({"channel_stats",
                   [proj](std::span<const Var> in) {
                     return add(random_projection(channel_mean(in[0]), proj),
                                random_projection(channel_std(in[0]), proj + 1));
                   },
                   {random_tensor({1, 3, 3, 3}, rng)},
                   {}});

  cases.push_back({"sanet_attend",
                   [proj](std::span<const Var> in) {
                     AttentionBlock b{in[2], in[3], in[4], in[5], in[6], in[7], 4};
                     return random_projection(sanet_attend(b, in[0], in[1]), proj);
                   },
                   {random_tensor({1, 4, 3, 3}, rng), random_tensor({1, 4, 2, 3}, rng),
                    random_tensor({2, 4, 1, 1}, rng), random_tensor({2}, rng),
                    random_tensor({2, 4, 1, 1}, rng), random_tensor({2}, rng),
                    random_tensor({4, 4, 1, 1}, rng), random_tensor({4}, rng)},
                   {}});
  cases.push_back({"fuse_levels",
                   [proj](std::span<const Var> in) {
                     return random_projection(
                         fuse_levels(in[0], in[1], in[2], in[3], {0.7, 0.4}), proj);
                   },
                   {random_tensor({1, 4, 4, 4}, rng), random_tensor({1, 6, 2, 2}, rng),
                    random_tensor({4, 6, 1, 1}, rng), random_tensor({4}, rng)},
                   {}});

  const Checkpoint ckpt = init_parameters(seed);
  cases.push_back({"decode",
                   [proj, params = ckpt.params](std::span<const Var> in) {
                     Bindings b(in[0].graph(), params, false);
                     return random_projection(decode(b, in[0]), proj);
                   },
                   {random_uniform({1, kLowChannels, 4, 4}, rng)},
                   {}});

  // Full training objective with every term active, probed on a sample of
  // coordinates of each parameter tensor.
  GradCheckCase full;
  full.name = "full_loss";
  // Biases get small random values: with the zero-bias init, all-zero
  // post-ReLU patches put downstream pre-activations exactly on the kink.
  std::vector<std::string> names;
  for (const auto& entry : parameter_layout()) {
    names.push_back(entry.name);
    full.inputs.push_back(entry.fan_in ? ckpt.params.at(entry.name)
                                      : random_tensor(entry.shape, rng, 0.1));
  }
  const Tensor content = random_uniform({1, 3, 16, 16}, rng);
  const Tensor style = random_uniform({1, 3, 16, 16}, rng);
  full.fn = [names, content, style](std::span<const Var> in) {
    std::map<std::string, Var> vars;
    for (std::size_t i = 0; i < names.size(); ++i) vars.emplace(names[i], in[i]);
    const Bindings b = Bindings::from_vars(in[0].graph(), std::move(vars));
    const StyleNet net = make_style_net(b, {1.0, 1.0});
    Graph& g = in[0].graph();
    LossWeights w;
    w.content = 1.0;
    w.style = 1.0;
    return total_loss(net, g.constant(content), g.constant(style), w).total;
  };
  const auto& layout = parameter_layout();
  for (std::size_t i = 0; i < layout.size(); ++i) {
    full.coords.push_back(smooth_coords(full.fn, full.inputs, i,
                                        layout[i].fan_in ? 3 : 2, rng,
                                        kDefaultFiniteDiffStep));
  }
  cases.push_back(std::move(full));
  return cases;
}

bool GradCheckReport::all_passed() const {
  return std::all_of(results.begin(), results.end(),
                     [](const GradCheckResult& r) { return r.passed; });
}

void GradCheckReport::print(std::ostream& os) const {
  char line[160];
  for (const auto& r : results) {
    std::snprintf(line, sizeof(line), "%-24s worst_rel_error=%.3e  %s\n",
                  r.name.c_str(), r.worst_error, r.passed ? "ok" : "FAIL");
    os << line;
  }
  std::snprintf(line, sizeof(line), "tolerance %.1e: %s\n", tolerance,
                all_passed() ? "all passed" : "FAILED");
  os << line;
}

GradCheckReport run_gradcheck(std::uint64_t seed, double tolerance) {
  GradCheckReport report;
  report.tolerance = tolerance;
  for (const auto& c : standard_gradcheck_cases(seed)) {
    const double err = check_gradients(c);
    report.results.push_back({c.name, err, err <= tolerance});
  }
  return report;
}

}  // namespace pstyle
