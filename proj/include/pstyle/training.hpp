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
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "pstyle/losses.hpp"

namespace pstyle {

struct TrainConfig {
  double lr = 1e-4;
  std::size_t batch_size = 5;
  std::size_t steps = 200;
  std::size_t crop_size = 16;
  std::uint64_t seed = 0;
  LossWeights weights;
  // Fusion weights used for the Icc / Iss passes during training.
  FusionWeights fusion{1.0, 1.0};
  std::filesystem::path content_dir;
  std::filesystem::path style_dir;

  // Throws ConfigError on batch_size < 1, bad crop size or invalid weights.
  void validate() const;
  std::uint64_t digest() const;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossTerms> trace;
};

using StepCallback = std::function<void(std::size_t step, const LossTerms&)>;

// All PNG/PPM/PGM files of a directory in name order, as RGB. Throws
// ConfigError if the directory is missing or holds no images.
std::vector<ImageBuffer> load_corpus(const std::filesystem::path& dir);

// Runs config.steps iterations of: sample batch_size content/style pairs
// uniformly, crop, evaluate the loss per item, average the gradients, take
// one Adam step. Starts from `initial` or init_parameters(config.seed).
// Bit-reproducible for a fixed seed. A non-finite loss throws NumericError
// naming the step.
TrainResult train(const TrainConfig& config,
                  const std::vector<ImageBuffer>& content_corpus,
                  const std::vector<ImageBuffer>& style_corpus,
                  std::optional<Checkpoint> initial = std::nullopt,
                  const StepCallback& on_step = {});

// Loads both corpora from the configured directories.
TrainResult train(const TrainConfig& config,
                  std::optional<Checkpoint> initial = std::nullopt,
                  const StepCallback& on_step = {});

// CSV: step,pixel_identity,feature_identity,content_aux,style_aux,total
void write_loss_trace(const std::vector<LossTerms>& trace,
                      const std::filesystem::path& path);

// Mean total over trace[begin, begin + count).
double mean_total(const std::vector<LossTerms>& trace, std::size_t begin,
                  std::size_t count);

}  // namespace pstyle
