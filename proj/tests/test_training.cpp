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

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>

#include "pstyle/error.hpp"
#include "pstyle/training.hpp"

using namespace pstyle;
namespace fs = std::filesystem;

namespace {

const fs::path kAssets = PSTYLE_ASSETS_DIR;

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.steps = 3;
  cfg.batch_size = 2;
  cfg.seed = 11;
  cfg.content_dir = kAssets / "toy" / "content";
  cfg.style_dir = kAssets / "toy" / "style";
  return cfg;
}

bool same_trace(const std::vector<LossTerms>& a, const std::vector<LossTerms>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].total != b[i].total || a[i].pixel_identity != b[i].pixel_identity ||
        a[i].feature_identity != b[i].feature_identity) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("toy corpora load in name order as RGB") {
  const auto content = load_corpus(kAssets / "toy" / "content");
  const auto style = load_corpus(kAssets / "toy" / "style");
  CHECK(content.size() == 6);
  CHECK(style.size() == 6);
  for (const auto& img : content) {
    CHECK(img.channels == 3);
    CHECK(img.width == 32);
  }
}

TEST_CASE("missing or empty corpus directories name the path") {
  CHECK_THROWS_WITH_AS(load_corpus("/definitely/not/here"),
                       doctest::Contains("/definitely/not/here"), ConfigError);
  const fs::path empty = fs::temp_directory_path() / "pstyle_empty_corpus";
  fs::create_directories(empty);
  CHECK_THROWS_WITH_AS(load_corpus(empty), doctest::Contains(empty.c_str()), ConfigError);
}

TEST_CASE("config validation") {
  TrainConfig cfg = small_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.crop_size = 20;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.lr = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.fusion = {0.0, 0.0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.crop_size = 64;  // larger than the 32x32 toy images
  CHECK_THROWS_AS(train(cfg), ConfigError);
}

TEST_CASE("zero steps return the initial parameters untouched") {
  TrainConfig cfg = small_config();
  cfg.steps = 0;
  const TrainResult r = train(cfg);
  CHECK(r.trace.empty());
  CHECK(r.checkpoint == init_parameters(cfg.seed));

  Checkpoint start = init_parameters(99);
  start.step = 7;
  CHECK(train(cfg, start).checkpoint == start);
}

TEST_CASE("training is bit-reproducible, also across thread counts") {
  const TrainConfig cfg = small_config();
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const TrainResult a = train(cfg);
  omp_set_num_threads(3);
  const TrainResult b = train(cfg);
  omp_set_num_threads(saved);
  CHECK(same_trace(a.trace, b.trace));
  CHECK(a.checkpoint == b.checkpoint);
  CHECK(a.checkpoint.step == 3);
  CHECK(a.checkpoint.config_digest == cfg.digest());
  CHECK_FALSE(a.checkpoint.params == init_parameters(cfg.seed).params);

  TrainConfig other = cfg;
  other.seed = 12;
  CHECK_FALSE(same_trace(a.trace, train(other).trace));
  CHECK(other.digest() != cfg.digest());
}

TEST_CASE("continuing from a checkpoint accumulates the step count") {
  TrainConfig cfg = small_config();
  cfg.steps = 1;
  const TrainResult first = train(cfg);
  const TrainResult second = train(cfg, first.checkpoint);
  CHECK(second.checkpoint.step == 2);
}

TEST_CASE("trace callback, CSV output and window means") {
  TrainConfig cfg = small_config();
  std::vector<std::size_t> seen;
  const TrainResult r = train(cfg, std::nullopt,
                              [&](std::size_t step, const LossTerms&) { seen.push_back(step); });
  CHECK(seen == std::vector<std::size_t>{0, 1, 2});
  for (const auto& t : r.trace) {
    CHECK(t.total == doctest::Approx(t.pixel_identity + 50.0 * t.feature_identity));
  }

  const fs::path csv = fs::temp_directory_path() / "pstyle_trace.csv";
  write_loss_trace(r.trace, csv);
  std::ifstream in(csv);
  std::string header, row;
  std::getline(in, header);
  CHECK(header == "step,pixel_identity,feature_identity,content_aux,style_aux,total");
  std::size_t rows = 0;
  while (std::getline(in, row)) ++rows;
  CHECK(rows == 3);

  CHECK(mean_total(r.trace, 0, 3) ==
        doctest::Approx((r.trace[0].total + r.trace[1].total + r.trace[2].total) / 3));
  CHECK_THROWS_AS(mean_total(r.trace, 2, 2), ConfigError);
}

TEST_CASE("a diverging loss stops training with the step index") {
  TrainConfig cfg = small_config();
  Checkpoint blown = init_parameters(cfg.seed);
  for (double& v : blown.params.at("decoder.conv3.weight").data()) v = 1e300;
  CHECK_THROWS_WITH_AS(train(cfg, blown), doctest::Contains("step 0"), NumericError);
}

}  // TEST_SUITE
