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
#include <filesystem>
#include <random>

#include <doctest.h>

#include "oracles.hpp"
#include "pstyle/error.hpp"
#include "pstyle/net_blocks.hpp"

using namespace pstyle;
namespace fs = std::filesystem;

namespace {

Checkpoint sample_checkpoint() {
  Checkpoint c = init_parameters(9);
  c.step = 1234;
  c.config_digest = 0xdeadbeefcafef00dULL;
  return c;
}

}  // namespace

TEST_SUITE("net_blocks") {

TEST_CASE("layout names and shapes") {
  const auto& layout = parameter_layout();
  CHECK(layout.size() == 30);  // 8 encoder, 12 attention, 4 fusion, 6 decoder
  std::map<std::string, Shape> by_name;
  for (const auto& s : layout) by_name[s.name] = s.shape;
  CHECK(by_name.at("encoder.conv3.weight") == Shape{48, 32, 4, 4});
  CHECK(by_name.at("encoder.conv4.weight") == Shape{64, 48, 4, 4});
  CHECK(by_name.at("attn4.f.weight") == Shape{24, 48, 1, 1});
  CHECK(by_name.at("attn5.h.weight") == Shape{64, 64, 1, 1});
  CHECK(by_name.at("fusion.proj.weight") == Shape{48, 64, 1, 1});
  CHECK(by_name.at("decoder.conv3.weight") == Shape{3, 16, 3, 3});
  CHECK(by_name.at("decoder.conv3.bias") == Shape{3});
}

TEST_CASE("init is seeded, He-scaled and has zero biases") {
  CHECK(init_parameters(3) == init_parameters(3));
  CHECK_FALSE(init_parameters(3) == init_parameters(4));
  const Checkpoint c = init_parameters(3);
  for (const auto& entry : parameter_layout()) {
    const Tensor& t = c.params.at(entry.name);
    if (entry.fan_in == 0) {
      CHECK(t == Tensor(entry.shape, 0.0));
      continue;
    }
    if (t.numel() < 500) continue;
    double sq = 0.0;
    for (double v : t.data()) sq += v * v;
    const double stddev = std::sqrt(sq / static_cast<double>(t.numel()));
    const double expected = std::sqrt(2.0 / static_cast<double>(entry.fan_in));
    CAPTURE(entry.name);
    CHECK(std::abs(stddev - expected) <= 0.2 * expected);
  }
}

TEST_CASE("checkpoint bytes round trip exactly") {
  const Checkpoint c = sample_checkpoint();
  const auto bytes = serialize_checkpoint(c);
  CHECK(parse_checkpoint(bytes) == c);
  CHECK(serialize_checkpoint(parse_checkpoint(bytes)) == bytes);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "PSTY");

  const fs::path p = fs::temp_directory_path() / "pstyle_test_ckpt.bin";
  save_checkpoint(c, p);
  CHECK(load_checkpoint(p) == c);
}

TEST_CASE("checkpoint corruption is detected") {
  auto bytes = serialize_checkpoint(sample_checkpoint());
  SUBCASE("bad magic") {
    bytes[0] = 'X';
    CHECK_THROWS_WITH_AS(parse_checkpoint(bytes), doctest::Contains("magic"), CheckpointError);
  }
  SUBCASE("unknown version") {
    bytes[4] = 9;
    CHECK_THROWS_WITH_AS(parse_checkpoint(bytes), doctest::Contains("version"), CheckpointError);
  }
  SUBCASE("flipped payload bit") {
    bytes[bytes.size() / 2] ^= 1;
    CHECK_THROWS_WITH_AS(parse_checkpoint(bytes), doctest::Contains("CRC"), CheckpointError);
  }
  SUBCASE("truncated") {
    bytes.resize(10);
    CHECK_THROWS_AS(parse_checkpoint(bytes), CheckpointError);
  }
}

TEST_CASE("validation names missing, unknown and misshapen keys") {
  Checkpoint c = sample_checkpoint();
  SUBCASE("missing") {
    c.params.erase("attn5.g.bias");
    CHECK_THROWS_WITH_AS(validate_checkpoint(c), doctest::Contains("attn5.g.bias"),
                         CheckpointError);
  }
  SUBCASE("unknown") {
    c.params.emplace("extra.weight", Tensor({1}));
    CHECK_THROWS_WITH_AS(validate_checkpoint(c), doctest::Contains("extra.weight"),
                         CheckpointError);
  }
  SUBCASE("misshapen") {
    c.params["decoder.conv1.bias"] = Tensor({31});
    CHECK_THROWS_WITH_AS(validate_checkpoint(c), doctest::Contains("decoder.conv1.bias"),
                         CheckpointError);
  }
  SUBCASE("load rejects what parse accepts") {
    c.params.erase("fusion.merge.weight");
    const fs::path p = fs::temp_directory_path() / "pstyle_test_ckpt_bad.bin";
    save_checkpoint(c, p);
    CHECK_THROWS_AS(load_checkpoint(p), CheckpointError);
  }
}

TEST_CASE("encoder and decoder shapes across sizes") {
  const Checkpoint c = init_parameters(1);
  std::mt19937_64 rng(1);
  const std::pair<std::size_t, std::size_t> sizes[] = {
      {16, 16}, {16, 128}, {24, 40}, {128, 64}, {56, 88}};
  for (auto [h, w] : sizes) {
    CAPTURE(h);
    CAPTURE(w);
    Graph g;
    Bindings b(g, c.params, false);
    const FeaturePyramid p = encode(b, g.constant(oracle::random_tensor({1, 3, h, w}, rng, 0.0, 1.0)));
    CHECK(p.stages[0].shape() == Shape{1, 16, h, w});
    CHECK(p.stages[1].shape() == Shape{1, 32, h / 2, w / 2});
    CHECK(p.f4().shape() == Shape{1, kLowChannels, h / 4, w / 4});
    CHECK(p.f5().shape() == Shape{1, kHighChannels, h / 8, w / 8});
    CHECK(decode(b, p.f4()).shape() == Shape{1, 3, h, w});
  }
}

TEST_CASE("encoder rejects sizes that do not halve cleanly") {
  const Checkpoint c = init_parameters(1);
  Graph g;
  Bindings b(g, c.params, false);
  CHECK_THROWS_AS(encode(b, g.constant(Tensor({1, 3, 20, 16}))), ShapeError);
  CHECK_THROWS_AS(encode(b, g.constant(Tensor({1, 3, 8, 8}))), ShapeError);
  CHECK_THROWS_AS(encode(b, g.constant(Tensor({1, 1, 16, 16}))), ShapeError);
  CHECK_THROWS_AS(decode(b, g.constant(Tensor({1, 64, 4, 4}))), ShapeError);
}

TEST_CASE("bindings expose gradients for every parameter") {
  const Checkpoint c = init_parameters(2);
  Graph g;
  Bindings b(g, c.params, true);
  std::mt19937_64 rng(2);
  Var x = g.constant(oracle::random_tensor({1, 3, 16, 16}, rng, 0.0, 1.0));
  g.backward(sum(decode(b, encode(b, x).f4())));
  const ParameterSet grads = b.gradients();
  CHECK(grads.size() == c.params.size());
  // Attention and fusion parameters are not on this path.
  CHECK(grads.at("attn4.f.weight") == Tensor(c.params.at("attn4.f.weight").shape(), 0.0));
  CHECK(max_abs_diff(grads.at("decoder.conv3.bias"), Tensor({3}, 0.0)) > 0.0);
  CHECK_THROWS_AS(b("no.such.weight"), CheckpointError);
}

}  // TEST_SUITE
