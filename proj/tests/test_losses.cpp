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
#include <random>

#include <doctest.h>

#include "oracles.hpp"
#include "pstyle/error.hpp"
#include "pstyle/image_io.hpp"
#include "pstyle/losses.hpp"

using namespace pstyle;

namespace {

// Transfer returns its content input unchanged; features are the image and
// a second fixed map of it.
StyleNet passthrough_net() {
  StyleNet net;
  net.transfer = [](Var c, Var) { return c; };
  net.features = [](Var x) { return std::vector<Var>{x, scale(x, 3.0)}; };
  return net;
}

// Transfer adds `offset` everywhere; the only feature is the image itself.
StyleNet shifting_net(double offset) {
  StyleNet net;
  net.transfer = [offset](Var c, Var) {
    return add(c, c.graph().constant(Tensor(c.shape(), offset)));
  };
  net.features = [](Var x) { return std::vector<Var>{x}; };
  return net;
}

// Mixes content and style; features are x and 2x.
StyleNet blending_net() {
  StyleNet net;
  net.transfer = [](Var c, Var s) { return add(scale(c, 0.7), scale(s, 0.3)); };
  net.features = [](Var x) { return std::vector<Var>{x, scale(x, 2.0)}; };
  return net;
}

Tensor blend(const Tensor& c, const Tensor& s) {
  Tensor out(c.shape());
  for (std::size_t i = 0; i < c.numel(); ++i) out[i] = 0.7 * c[i] + 0.3 * s[i];
  return out;
}

Tensor scaled(const Tensor& t, double f) {
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.numel(); ++i) out[i] = t[i] * f;
  return out;
}

// Per-plane means and sqrt(var + 1e-5), flattened.
std::pair<std::vector<double>, std::vector<double>> plane_stats(const Tensor& t) {
  std::vector<double> mu, sigma;
  const std::size_t hw = t.dim(2) * t.dim(3);
  for (std::size_t p = 0; p < t.dim(0) * t.dim(1); ++p) {
    double m = 0.0;
    for (std::size_t i = 0; i < hw; ++i) m += t[p * hw + i];
    m /= static_cast<double>(hw);
    double v = 0.0;
    for (std::size_t i = 0; i < hw; ++i) v += (t[p * hw + i] - m) * (t[p * hw + i] - m);
    v /= static_cast<double>(hw);
    mu.push_back(m);
    sigma.push_back(std::sqrt(v + 1e-5));
  }
  return {mu, sigma};
}

double diff_norm(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return oracle::l2(d);
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("identity loss of a pass-through network is exactly zero") {
  std::mt19937_64 rng(1);
  Graph g;
  Var c = g.constant(oracle::random_tensor({1, 3, 4, 4}, rng, 0, 1));
  Var s = g.constant(oracle::random_tensor({1, 3, 4, 4}, rng, 0, 1));
  const IdentityLoss id = identity_loss(passthrough_net(), c, s, 1.0, 50.0);
  CHECK(id.pixel.value()[0] == 0.0);
  CHECK(id.feature.value()[0] == 0.0);
  CHECK(id.total.value()[0] == 0.0);
}

TEST_CASE("identity loss on a 2x2 image shifted by 0.1") {
  Graph g;
  Var c = g.constant(Tensor({1, 1, 2, 2}, std::vector<double>{0.1, 0.4, 0.7, 0.2}));
  Var s = g.constant(Tensor({1, 1, 2, 2}, std::vector<double>{0.9, 0.3, 0.5, 0.6}));
  const IdentityLoss id = identity_loss(shifting_net(0.1), c, s, 1.0, 50.0);
  // Each branch is off by 0.1 in four pixels: ||.|| = sqrt(4 * 0.01).
  const double branch = std::sqrt(0.01 + 0.01 + 0.01 + 0.01);
  CHECK(std::abs(id.pixel.value()[0] - 2.0 * branch) <= 1e-12);
  CHECK(std::abs(id.feature.value()[0] - 2.0 * branch) <= 1e-12);
  CHECK(std::abs(id.total.value()[0] - (1.0 + 50.0) * 2.0 * branch) <= 1e-12);
}

TEST_CASE("content loss matches the direct-norm oracle") {
  std::mt19937_64 rng(2);
  const Tensor c = oracle::random_tensor({1, 3, 4, 4}, rng, 0, 1);
  const Tensor s = oracle::random_tensor({1, 3, 4, 4}, rng, 0, 1);
  Graph g;
  const double got = content_loss(blending_net(), g.constant(c), g.constant(s)).value()[0];
  // Last feature is 2x; compare instance-normalized maps.
  const double expected = oracle::l2_diff(oracle::instance_norm(scaled(blend(c, s), 2.0)),
                                          oracle::instance_norm(scaled(c, 2.0)));
  CHECK(std::abs(got - expected) <= 1e-10);
}

TEST_CASE("style loss matches the direct-norm oracle") {
  std::mt19937_64 rng(3);
  const Tensor c = oracle::random_tensor({1, 3, 4, 4}, rng, 0, 1);
  const Tensor s = oracle::random_tensor({1, 3, 4, 4}, rng, 0, 1);
  Graph g;
  const double got = style_loss(blending_net(), g.constant(c), g.constant(s)).value()[0];
  double expected = 0.0;
  for (double f : {1.0, 2.0}) {
    const auto [mu_a, sd_a] = plane_stats(scaled(blend(c, s), f));
    const auto [mu_b, sd_b] = plane_stats(scaled(s, f));
    expected += diff_norm(mu_a, mu_b) + diff_norm(sd_a, sd_b);
  }
  CHECK(std::abs(got - expected) <= 1e-10);
}

TEST_CASE("aux terms appear only with non-zero weights") {
  std::mt19937_64 rng(4);
  Graph g;
  Var c = g.constant(oracle::random_tensor({1, 3, 4, 4}, rng, 0, 1));
  Var s = g.constant(oracle::random_tensor({1, 3, 4, 4}, rng, 0, 1));
  LossWeights w;
  const LossGraph base = total_loss(blending_net(), c, s, w);
  CHECK(base.terms.content_aux == 0.0);
  CHECK(base.terms.style_aux == 0.0);
  CHECK(base.terms.total ==
        doctest::Approx(base.terms.pixel_identity + 50.0 * base.terms.feature_identity));
  w.content = 2.0;
  w.style = 0.5;
  const LossGraph full = total_loss(blending_net(), c, s, w);
  CHECK(full.terms.content_aux > 0.0);
  CHECK(full.terms.style_aux > 0.0);
  CHECK(full.terms.total ==
        doctest::Approx(base.terms.total + 2.0 * full.terms.content_aux +
                        0.5 * full.terms.style_aux).epsilon(1e-12));
}

TEST_CASE("losses reject content and style of different sizes") {
  Graph g;
  Var c = g.constant(Tensor({1, 3, 4, 4}));
  Var s = g.constant(Tensor({1, 3, 4, 8}));
  CHECK_THROWS_AS(identity_loss(passthrough_net(), c, s, 1, 50), ShapeError);
}

TEST_CASE("real network identity loss is finite and positive") {
  const Checkpoint ckpt = init_parameters(5);
  std::mt19937_64 rng(5);
  Graph g;
  Bindings b(g, ckpt.params, true);
  const StyleNet net = make_style_net(b, {1.0, 1.0});
  Var c = g.constant(oracle::random_tensor({1, 3, 16, 16}, rng, 0, 1));
  Var s = g.constant(oracle::random_tensor({1, 3, 16, 16}, rng, 0, 1));
  const LossGraph lg = total_loss(net, c, s, LossWeights{});
  CHECK(std::isfinite(lg.terms.total));
  CHECK(lg.terms.pixel_identity > 0.0);
  CHECK(lg.terms.feature_identity > 0.0);
  g.backward(lg.total);
  for (const auto& [name, grad] : b.gradients()) {
    CAPTURE(name);
    CHECK(grad.all_finite());
  }
}

TEST_CASE("adam single step matches the closed form") {
  ParameterSet params{{"theta", Tensor({2}, std::vector<double>{1.0, -2.0})}};
  const ParameterSet grads{{"theta", Tensor({2}, std::vector<double>{0.5, 3.0})}};
  AdamState state;
  state.options.lr = 0.1;
  adam_step(params, grads, state);
  // t = 1: m_hat = g, v_hat = g^2, so theta -= lr * g / (|g| + eps).
  CHECK(std::abs(params["theta"][0] - (1.0 - 0.1 * 0.5 / (0.5 + 1e-8))) <= 1e-12);
  CHECK(std::abs(params["theta"][1] - (-2.0 - 0.1 * 3.0 / (3.0 + 1e-8))) <= 1e-12);
  CHECK(state.step == 1);
}

TEST_CASE("adam follows the scalar recurrence over many steps") {
  ParameterSet params{{"p", Tensor({1}, std::vector<double>{0.3})}};
  AdamState state;
  oracle::AdamScalar ref;
  double theta = 0.3;
  std::mt19937_64 rng(6);
  std::normal_distribution<double> grad(0.0, 1.0);
  for (int t = 0; t < 25; ++t) {
    const double gv = grad(rng);
    adam_step(params, {{"p", Tensor({1}, std::vector<double>{gv})}}, state);
    theta = ref.step(theta, gv, 1e-4);
  }
  CHECK(std::abs(params["p"][0] - theta) <= 1e-12);
}

TEST_CASE("adam minimises a quadratic") {
  ParameterSet params{{"theta", Tensor({1}, std::vector<double>{1.0})}};
  AdamState state;
  state.options.lr = 0.1;
  for (int t = 0; t < 200; ++t) {
    const double th = params["theta"][0];
    adam_step(params, {{"theta", Tensor({1}, std::vector<double>{2.0 * th})}}, state);
  }
  CHECK(std::abs(params["theta"][0]) < 0.1);
}

TEST_CASE("adam refuses bad gradients without touching parameters") {
  ParameterSet params{{"a", Tensor({1}, 1.0)}, {"b", Tensor({1}, 2.0)}};
  const ParameterSet before = params;
  AdamState state;
  CHECK_THROWS_WITH_AS(
      adam_step(params, {{"a", Tensor({1}, 0.5)}, {"b", Tensor({1}, std::nan(""))}}, state),
      doctest::Contains("'b'"), NumericError);
  CHECK(params == before);
  CHECK(state.step == 0);
  CHECK_THROWS_AS(adam_step(params, {{"a", Tensor({1}, 0.5)}}, state), ShapeError);
  CHECK_THROWS_AS(adam_step(params, {{"a", Tensor({1}, 0.5)}, {"b", Tensor({2}, 0.5)}}, state),
                  ShapeError);
}

TEST_CASE("random crops are sub-rectangles and validated") {
  ImageBuffer img(32, 24, 3);
  for (std::size_t y = 0; y < 24; ++y)
    for (std::size_t x = 0; x < 32; ++x)
      for (std::size_t c = 0; c < 3; ++c) img.at(x, y, c) = (x + 32 * y + 1000 * c) / 4000.0;
  std::mt19937_64 rng(7), rng2(7);
  for (int i = 0; i < 20; ++i) {
    const ImageBuffer crop = random_crop(img, 16, rng);
    CHECK(crop == random_crop(img, 16, rng2));
    REQUIRE(crop.width == 16);
    REQUIRE(crop.height == 16);
    // Recover the offset from the top-left pixel and compare everything.
    const auto code = static_cast<std::size_t>(std::lround(crop.at(0, 0, 0) * 4000.0));
    const std::size_t x0 = code % 32, y0 = code / 32;
    CHECK(x0 + 16 <= 32);
    CHECK(y0 + 16 <= 24);
    bool same = true;
    for (std::size_t y = 0; y < 16; ++y)
      for (std::size_t x = 0; x < 16; ++x)
        for (std::size_t c = 0; c < 3; ++c) same = same && crop.at(x, y, c) == img.at(x0 + x, y0 + y, c);
    CHECK(same);
  }
  CHECK_THROWS_AS(random_crop(img, 12, rng), ConfigError);
  CHECK_THROWS_AS(random_crop(img, 32, rng), ShapeError);
}

}  // TEST_SUITE
