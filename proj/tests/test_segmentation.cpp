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
#include <numbers>
#include <random>

#include <doctest.h>

#include "pstyle/error.hpp"
#include "pstyle/segmentation.hpp"

using namespace pstyle;
namespace fs = std::filesystem;

namespace {

double mass(const Mask& m) {
  double s = 0.0;
  for (double v : m.data) s += v;
  return s;
}

}  // namespace

TEST_SUITE("segmentation") {

TEST_CASE("binary threshold at byte 128") {
  ImageBuffer gray(3, 1, 1);
  gray.data = {128 / 255.0, 127 / 255.0, 1.0};
  const Mask m = mask_from_image(gray);
  CHECK(m.data == std::vector<double>{1.0, 0.0, 1.0});
  CHECK(mask_from_image(gray, 200).data == std::vector<double>{0.0, 0.0, 1.0});
  CHECK_THROWS_AS(mask_from_image(ImageBuffer(2, 2, 3)), FormatError);
}

TEST_CASE("mask files: gray accepted, RGB rejected with advice") {
  const fs::path dir = fs::temp_directory_path() / "pstyle_test_seg";
  fs::create_directories(dir);
  Mask m(4, 2);
  m.at(1, 0) = 1.0;
  m.at(3, 1) = 1.0;
  write_image(mask_to_image(m), dir / "m.pgm", ImageFormat::kPgm);
  CHECK(load_mask(dir / "m.pgm") == m);
  write_image(ImageBuffer(4, 2, 3, 1.0), dir / "rgb.png", ImageFormat::kPng);
  CHECK_THROWS_WITH_AS(load_mask(dir / "rgb.png"), doctest::Contains("grayscale"), FormatError);
}

TEST_CASE("center ellipse covers the expected fraction") {
  const ImageBuffer img(128, 128, 3, 0.5);
  const Mask m = trivial_segment(img, SegmentMethod::kCenterEllipse);
  const double fraction = mass(m) / (128.0 * 128.0);
  CHECK(std::abs(fraction - std::numbers::pi * 0.28 * 0.38) <= 0.02);
  CHECK(m.at(64, 70) == 1.0);
  CHECK(m.at(0, 0) == 0.0);
  CHECK(m.at(64, 2) == 0.0);
}

TEST_CASE("luma threshold uses Rec.601 weights") {
  ImageBuffer img(3, 1, 3);
  img.data = {1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0};  // luma .299 .587 .114
  SegmentParams p;
  p.luma_min = 0.2;
  p.luma_max = 0.5;
  CHECK(trivial_segment(img, SegmentMethod::kLumaThreshold, p).data ==
        std::vector<double>{1.0, 0.0, 0.0});
  CHECK(parse_segment_method("luma_threshold") == SegmentMethod::kLumaThreshold);
  CHECK_THROWS_AS(parse_segment_method("graph_cut"), ConfigError);
}

TEST_CASE("crop_by_mask yields an aligned box containing the subject") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pos(0, 63);
  const ImageBuffer img(64, 48, 3, 0.25);
  for (int trial = 0; trial < 50; ++trial) {
    Mask m(64, 48);
    const int points = 1 + trial % 4;
    for (int i = 0; i < points; ++i) m.at(pos(rng), pos(rng) % 48) = 1.0;
    const MaskCrop crop = crop_by_mask(img, m);
    const BoundingBox& b = crop.box;
    CHECK(b.x % 8 == 0);
    CHECK(b.y % 8 == 0);
    CHECK(b.width % 8 == 0);
    CHECK(b.height % 8 == 0);
    CHECK(b.width >= 16);
    CHECK(b.height >= 16);
    CHECK(b.x + b.width <= 64);
    CHECK(b.y + b.height <= 48);
    for (std::size_t y = 0; y < 48; ++y)
      for (std::size_t x = 0; x < 64; ++x)
        if (m.at(x, y) == 1.0) CHECK(b.contains(x, y));
    CHECK(crop.fragment.width == b.width);
  }
}

TEST_CASE("crop_by_mask examples") {
  ImageBuffer img(32, 32, 1);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = i / 1024.0;
  Mask m(32, 32);
  m.at(9, 10) = 1.0;
  m.at(12, 20) = 1.0;
  const MaskCrop crop = crop_by_mask(img, m);
  CHECK(crop.box == BoundingBox{8, 8, 16, 16});
  CHECK(crop.fragment.at(0, 0, 0) == img.at(8, 8, 0));
  CHECK(crop.fragment.at(15, 15, 0) == img.at(23, 23, 0));

  // A subject touching the right edge is shifted inward, not cut.
  Mask edge(32, 32);
  edge.at(31, 31) = 1.0;
  CHECK(crop_by_mask(img, edge).box == BoundingBox{16, 16, 16, 16});

  CHECK_THROWS_WITH_AS(crop_by_mask(img, Mask(32, 32)), doctest::Contains("no subject region"),
                       ShapeError);
  CHECK_THROWS_AS(crop_by_mask(img, Mask(16, 32)), ShapeError);
}

TEST_CASE("feather smooths, stays in range and conserves interior mass") {
  Mask m(20, 20);
  for (std::size_t y = 8; y < 12; ++y)
    for (std::size_t x = 7; x < 13; ++x) m.at(x, y) = 1.0;
  CHECK(feather(m, 0) == m);
  for (std::size_t r : {1u, 2u, 3u}) {
    const Mask f = feather(m, r);
    CHECK(std::abs(mass(f) - mass(m)) <= 1e-12);
    for (double v : f.data) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  const Mask f1 = feather(m, 1);
  CHECK(f1.at(10, 10) == doctest::Approx(1.0));
  CHECK(f1.at(7, 8) == doctest::Approx(4.0 / 9.0));
  CHECK(f1.at(6, 7) == doctest::Approx(1.0 / 9.0));
  // Edge replication keeps a full mask full.
  const Mask ones(5, 4, 1.0);
  CHECK(feather(ones, 3) == ones);
}

}  // TEST_SUITE
