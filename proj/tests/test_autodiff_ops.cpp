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

#include <cmath>
#include <functional>
#include <random>

#include <doctest.h>

#include "oracles.hpp"
#include "pstyle/autodiff.hpp"
#include "pstyle/error.hpp"
#include "pstyle/finite_diff.hpp"
#include "pstyle/ops.hpp"

using namespace pstyle;

namespace {

Tensor values(Shape s, std::vector<double> v) { return Tensor(std::move(s), std::move(v)); }

// Analytic gradient of sum(op(x) * r) for a fixed random r, next to its
// central-difference estimate.
double op_grad_error(const std::function<Var(Var)>& op, const Tensor& x,
                     std::uint64_t seed) {
  Tensor r;
  {
    Graph probe;
    const Shape out_shape = op(probe.constant(x)).shape();
    // Offset so the projection never coincides with an input drawn from the same seed.
    std::mt19937_64 rng(seed + 0x5eed);
    r = oracle::random_tensor(out_shape, rng);
  }
  const auto loss = [&](Graph& g, Var in) { return sum(mul(op(in), g.constant(r))); };
  Graph g;
  Var in = g.leaf(x, true);
  g.backward(loss(g, in));
  const Tensor numeric = finite_diff_grad(
      [&](const Tensor& t) {
        Graph gg;
        return loss(gg, gg.constant(t)).value()[0];
      },
      x);
  return gradient_relative_error(g.grad(in), numeric);
}

}  // namespace

TEST_SUITE("autodiff") {

TEST_CASE("relu forward and the zero-point gradient") {
  Graph g;
  Var x = g.leaf(values({4}, {-1.0, 0.0, 2.0, -0.0}), true);
  Var y = relu(x);
  CHECK(y.value() == values({4}, {0.0, 0.0, 2.0, 0.0}));
  g.backward(sum(y));
  CHECK(g.grad(x) == values({4}, {0.0, 0.0, 1.0, 0.0}));
}

TEST_CASE("pad2d zero and reflect") {
  Graph g;
  Var x = g.constant(values({1, 1, 2, 3}, {1, 2, 3, 4, 5, 6}));
  Var z = pad2d(x, 1, PadMode::kZero);
  CHECK(z.shape() == Shape{1, 1, 4, 5});
  CHECK(z.value().at(0, 0, 0, 0) == 0.0);
  CHECK(z.value().at(0, 0, 1, 1) == 1.0);
  Var r = pad2d(x, 1, PadMode::kReflect);
  // row 0 of the input reflected: 2 1 2 3 2; the top pad row mirrors row 1.
  const Tensor& rv = r.value();
  CHECK(rv.at(0, 0, 1, 0) == 2.0);
  CHECK(rv.at(0, 0, 1, 4) == 2.0);
  CHECK(rv.at(0, 0, 0, 1) == 4.0);
  CHECK(rv.at(0, 0, 3, 2) == 2.0);
  CHECK_THROWS_AS(pad2d(x, 2, PadMode::kReflect), ShapeError);
}

TEST_CASE("conv2d examples and shape errors") {
  Graph g;
  Var one = g.constant(values({1, 1, 1, 1}, {1.0}));
  Var k5 = g.constant(values({1, 1, 1, 1}, {5.0}));
  Var b0 = g.constant(values({1}, {0.0}));
  CHECK(conv2d(one, k5, b0).value()[0] == 5.0);

  Var ones = g.constant(Tensor({1, 1, 3, 3}, 1.0));
  Var k9 = g.constant(Tensor({1, 1, 3, 3}, 1.0));
  CHECK(conv2d(ones, k9, b0).value()[0] == 9.0);

  // (5 + 2 - 3) / 3 is not exact.
  Var x = g.constant(Tensor({1, 1, 5, 5}, 1.0));
  CHECK_THROWS_AS(conv2d(x, k9, b0, {3, 1}), ShapeError);
  Var k_wrong = g.constant(Tensor({1, 2, 3, 3}, 1.0));
  CHECK_THROWS_AS(conv2d(x, k_wrong, b0, {1, 1}), ShapeError);
}

TEST_CASE("conv2d with zero padding matches the oracle") {
  std::mt19937_64 rng(3);
  const Tensor x = oracle::random_tensor({2, 3, 8, 8}, rng);
  const Tensor k = oracle::random_tensor({5, 3, 4, 4}, rng);
  const Tensor b = oracle::random_tensor({5}, rng);
  Graph g;
  Var y = conv2d(g.constant(x), g.constant(k), g.constant(b), {2, 1});
  CHECK(max_abs_diff(y.value(), oracle::conv2d(x, k, b, 2, 1)) <= 1e-12);
}

TEST_CASE("instance_norm matches the direct formula") {
  std::mt19937_64 rng(4);
  const Tensor x = oracle::random_tensor({2, 3, 4, 5}, rng, -3.0, 5.0);
  Graph g;
  Var y = instance_norm(g.constant(x));
  CHECK(max_abs_diff(y.value(), oracle::instance_norm(x)) <= 1e-12);
  // Each plane ends up with zero mean.
  for (std::size_t p = 0; p < 6; ++p) {
    double m = 0.0;
    for (std::size_t i = 0; i < 20; ++i) m += y.value()[p * 20 + i];
    CHECK(std::abs(m) < 1e-12);
  }
  // A constant plane maps to zeros rather than NaN.
  Var c = instance_norm(g.constant(Tensor({1, 1, 2, 2}, 3.0)));
  CHECK(c.value() == Tensor({1, 1, 2, 2}, 0.0));
}

TEST_CASE("softmax_rows sums to one and survives large logits") {
  Graph g;
  Var s = softmax_rows(g.constant(values({2, 3}, {1000.0, 1001.0, 1002.0, 0.0, 0.0, 0.0})));
  const Tensor& v = s.value();
  CHECK(v.all_finite());
  CHECK(v[0] + v[1] + v[2] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(v[3] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const double e1 = std::exp(1.0), e2 = std::exp(2.0);
  CHECK(v[2] == doctest::Approx(e2 / (1 + e1 + e2)).epsilon(1e-14));
}

TEST_CASE("matmul and transpose") {
  Graph g;
  Var a = g.constant(values({2, 3}, {1, 2, 3, 4, 5, 6}));
  Var b = g.constant(values({3, 1}, {1, 0, -1}));
  CHECK(matmul(a, b).value() == values({2, 1}, {-2.0, -2.0}));
  CHECK(transpose(a).value() == values({3, 2}, {1, 4, 2, 5, 3, 6}));
  CHECK_THROWS_AS(matmul(a, a), ShapeError);
}

TEST_CASE("upsample_nearest copies blocks and sums them back") {
  Graph g;
  Var x = g.leaf(values({1, 1, 2, 2}, {1, 2, 3, 4}), true);
  Var y = upsample_nearest(x, 2);
  CHECK(y.value() == values({1, 1, 4, 4}, {1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4}));
  Var w = g.constant(values({1, 1, 4, 4}, {1, 2, 0, 0, 3, 4, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1}));
  g.backward(sum(mul(y, w)));
  CHECK(g.grad(x) == values({1, 1, 2, 2}, {10, 0, 0, 1}));
}

TEST_CASE("l2_norm value and the gradient at zero") {
  Graph g;
  CHECK(l2_norm(g.constant(values({2}, {3, 4}))).value()[0] == 5.0);
  Var z = g.leaf(Tensor({3}, 0.0), true);
  Var n = l2_norm(z);
  g.backward(n);
  CHECK(n.value()[0] == 0.0);
  CHECK(g.grad(z) == Tensor({3}, 0.0));
}

TEST_CASE("channel statistics") {
  Graph g;
  Var x = g.constant(values({1, 2, 1, 2}, {1, 3, 2, 2}));
  CHECK(channel_mean(x).value() == values({1, 2}, {2.0, 2.0}));
  const Tensor& s = channel_std(x).value();
  CHECK(s[0] == doctest::Approx(std::sqrt(1.0 + 1e-5)).epsilon(1e-15));
  CHECK(s[1] == doctest::Approx(std::sqrt(1e-5)).epsilon(1e-15));
}

TEST_CASE("backward rejects non-scalar losses and double calls") {
  Graph g;
  Var x = g.leaf(values({2}, {1, 2}), true);
  CHECK_THROWS_AS(g.backward(scale(x, 2.0)), GraphError);
  Var loss = sum(mul(x, x));
  g.backward(loss);
  CHECK_THROWS_AS(g.backward(loss), GraphError);
  g.reset_grad();
  g.backward(loss);
  CHECK(g.grad(x) == values({2}, {2, 4}));
}

TEST_CASE("gradients accumulate over fan-out and are zero for unused leaves") {
  Graph g;
  Var x = g.leaf(values({1}, {3.0}), true);
  Var unused = g.leaf(values({2}, {1, 1}), true);
  Var y = add(mul(x, x), scale(x, 4.0));
  g.backward(sum(y));
  CHECK(g.grad(x)[0] == 10.0);
  CHECK(g.grad(unused) == Tensor({2}, 0.0));
  Var c = g.constant(values({1}, {1.0}));
  CHECK_THROWS_AS(g.grad(c), GraphError);
}

TEST_CASE("variables from another graph are rejected") {
  Graph a, b;
  Var x = a.constant(values({1}, {1.0}));
  Var y = b.constant(values({1}, {1.0}));
  CHECK_THROWS_AS(add(x, y), GraphError);
}

#ifndef NDEBUG
TEST_CASE("debug builds flag non-finite op outputs") {
  Graph g;
  Var x = g.constant(values({1}, {1e308}));
  CHECK_THROWS_AS(scale(x, 10.0), NumericError);
}
#endif

TEST_CASE("every op agrees with central differences over 10 seeds") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CAPTURE(seed);
    std::mt19937_64 rng(seed);
    const Tensor img = oracle::random_tensor({1, 2, 6, 6}, rng);
    const Tensor k = oracle::random_tensor({3, 2, 3, 3}, rng);
    const Tensor b = oracle::random_tensor({3}, rng);
    CHECK(op_grad_error([&](Var x) {
            Graph& g = x.graph();
            return conv2d(x, g.constant(k), g.constant(b), {1, 1, PadMode::kReflect});
          }, img, seed) < 1e-6);
    CHECK(op_grad_error([&](Var w) {
            Graph& g = w.graph();
            return conv2d(g.constant(img), w, g.constant(b), {1, 1});
          }, k, seed) < 1e-6);
    CHECK(op_grad_error([](Var x) { return instance_norm(x); }, img, seed) < 1e-6);
    CHECK(op_grad_error([](Var x) { return upsample_nearest(x, 2); }, img, seed) < 1e-6);
    CHECK(op_grad_error([](Var x) { return channel_std(x); }, img, seed) < 1e-6);
    CHECK(op_grad_error([](Var x) { return channel_mean(x); }, img, seed) < 1e-6);

    const Tensor m = oracle::random_tensor({4, 5}, rng, -2.0, 2.0);
    const Tensor m2 = oracle::random_tensor({5, 3}, rng);
    CHECK(op_grad_error([](Var x) { return softmax_rows(x); }, m, seed) < 1e-6);
    CHECK(op_grad_error([&](Var x) { return matmul(x, x.graph().constant(m2)); }, m, seed) < 1e-6);
    CHECK(op_grad_error([](Var x) { return l2_norm(x); }, m, seed) < 1e-6);

    Tensor r = oracle::random_tensor({3, 4}, rng);
    for (double& v : r.data()) {
      if (std::abs(v) < 0.05) v += 0.1;
    }
    CHECK(op_grad_error([](Var x) { return relu(x); }, r, seed) < 1e-6);
  }
}

}  // TEST_SUITE
