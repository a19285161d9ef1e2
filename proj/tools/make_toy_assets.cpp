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

// Writes the bundled toy corpora and the 64x64 sample triple:
//   <out>/toy/content/c00.png .. c05.png   32x32 synthetic portraits
//   <out>/toy/style/s00.png .. s05.png     32x32 synthetic textures
//   <out>/sample/{content.png, style.png, mask.pgm}
// Output is a pure function of the fixed seeds below.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <random>

#include "pstyle/image_io.hpp"
#include "pstyle/segmentation.hpp"

namespace fs = std::filesystem;
using pstyle::ImageBuffer;

namespace {

struct Rgb {
  double r, g, b;
};

Rgb lerp(Rgb a, Rgb b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

void put(ImageBuffer& img, std::size_t x, std::size_t y, Rgb c) {
  img.at(x, y, 0) = std::clamp(c.r, 0.0, 1.0);
  img.at(x, y, 1) = std::clamp(c.g, 0.0, 1.0);
  img.at(x, y, 2) = std::clamp(c.b, 0.0, 1.0);
}

Rgb random_color(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  return {u(rng), u(rng), u(rng)};
}

// Vertical gradient backdrop, an elliptical face with two eyes and a mouth,
// and shoulders along the bottom edge.
ImageBuffer portrait(std::size_t size, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(-0.06, 0.06);
  std::uniform_real_distribution<double> skin_shift(-0.12, 0.12);
  const Rgb top = random_color(rng), bottom = random_color(rng);
  const Rgb skin{0.85 + skin_shift(rng), 0.65 + skin_shift(rng), 0.5 + skin_shift(rng)};
  const Rgb shirt = random_color(rng);
  const double n = static_cast<double>(size);
  const double cx = n * (0.5 + jitter(rng)), cy = n * (0.45 + jitter(rng));
  const double ax = n * 0.2, ay = n * 0.27;

  ImageBuffer img(size, size, 3);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double px = static_cast<double>(x) + 0.5;
      const double py = static_cast<double>(y) + 0.5;
      Rgb c = lerp(top, bottom, py / n);
      const double sx = (px - cx) / (n * 0.4), sy = (py - n) / (n * 0.25);
      if (sx * sx + sy * sy <= 1.0) c = shirt;
      const double fx = (px - cx) / ax, fy = (py - cy) / ay;
      if (fx * fx + fy * fy <= 1.0) {
        c = skin;
        const double ex = std::abs(px - cx) - ax * 0.4;
        const double ey = py - (cy - ay * 0.2);
        if (ex * ex + ey * ey <= n * n * 0.0016) c = {0.1, 0.08, 0.08};
        const double my = py - (cy + ay * 0.45);
        if (std::abs(my) < n * 0.02 && std::abs(px - cx) < ax * 0.4) {
          c = {0.6, 0.2, 0.2};
        }
      }
      put(img, x, y, c);
    }
  }
  return img;
}

ImageBuffer texture(std::size_t size, int kind, std::mt19937_64& rng) {
  const Rgb a = random_color(rng), b = random_color(rng);
  std::uniform_real_distribution<double> freq(0.15, 0.45);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 0.08);
  const double f = freq(rng), theta = angle(rng);
  const double n = static_cast<double>(size);
  ImageBuffer img(size, size, 3);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double px = static_cast<double>(x), py = static_cast<double>(y);
      double t = 0.0;
      switch (kind % 3) {
        case 0:  // oriented stripes
          t = 0.5 + 0.5 * std::sin(f * (px * std::cos(theta) + py * std::sin(theta)));
          break;
        case 1:  // checker
          t = ((x / 4 + y / 4) % 2) ? 1.0 : 0.0;
          break;
        default: {  // rings
          const double r = std::hypot(px - n / 2, py - n / 2);
          t = 0.5 + 0.5 * std::cos(f * 2.0 * r);
        }
      }
      Rgb c = lerp(a, b, t);
      c.r += noise(rng);
      c.g += noise(rng);
      c.b += noise(rng);
      put(img, x, y, c);
    }
  }
  return img;
}

void save(const ImageBuffer& img, const fs::path& path) {
  fs::create_directories(path.parent_path());
  pstyle::write_image(img, path, pstyle::format_for_path(path));
  std::cout << "wrote " << path.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::path("assets");
  std::mt19937_64 rng(20191220);
  char name[32];
  for (int i = 0; i < 6; ++i) {
    std::snprintf(name, sizeof(name), "c%02d.png", i);
    save(portrait(32, rng), out / "toy" / "content" / name);
  }
  for (int i = 0; i < 6; ++i) {
    std::snprintf(name, sizeof(name), "s%02d.png", i);
    save(texture(32, i, rng), out / "toy" / "style" / name);
  }

  std::mt19937_64 sample_rng(64);
  const ImageBuffer content = portrait(64, sample_rng);
  save(content, out / "sample" / "content.png");
  save(texture(64, 0, sample_rng), out / "sample" / "style.png");
  const auto mask = pstyle::trivial_segment(content, pstyle::SegmentMethod::kCenterEllipse);
  save(pstyle::mask_to_image(mask), out / "sample" / "mask.pgm");
  return 0;
}
