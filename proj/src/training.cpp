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

#include "pstyle/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>

#include "pstyle/error.hpp"

namespace pstyle {

namespace {

ImageBuffer as_rgb(ImageBuffer img) {
  if (img.channels == 3) return img;
  ImageBuffer rgb(img.width, img.height, 3);
  for (std::size_t i = 0; i < img.width * img.height; ++i) {
    for (std::size_t c = 0; c < 3; ++c) rgb.data[i * 3 + c] = img.data[i];
  }
  return rgb;
}

struct ItemResult {
  LossTerms terms;
  ParameterSet grads;
  std::exception_ptr error;
};

ItemResult evaluate_item(const ParameterSet& params, const TrainConfig& config,
                         const ImageBuffer& content, const ImageBuffer& style) {
  ItemResult out;
  Graph graph;
  Bindings bound(graph, params, true);
  const StyleNet net = make_style_net(bound, config.fusion);
  const LossGraph loss = total_loss(net, graph.constant(to_tensor(content)),
                                    graph.constant(to_tensor(style)),
                                    config.weights);
  out.terms = loss.terms;
  if (std::isfinite(loss.terms.total)) {
    graph.backward(loss.total);
    out.grads = bound.gradients();
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (crop_size == 0 || crop_size % 8 != 0 || crop_size < 16) {
    throw ConfigError("crop size must be a multiple of 8 and >= 16, got " +
                      std::to_string(crop_size));
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    throw ConfigError("learning rate must be positive");
  }
  fusion.validate();
}

std::uint64_t TrainConfig::digest() const {
  std::ostringstream os;
  os.precision(17);
  os << architecture_digest() << ';' << lr << ';' << batch_size << ';' << crop_size
     << ';' << seed << ';' << weights.identity_pixel << ';'
     << weights.identity_feature << ';' << weights.content << ';' << weights.style
     << ';' << fusion.w1 << ';' << fusion.w2;
  return fnv1a64(os.str());
}

std::vector<ImageBuffer> load_corpus(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw ConfigError("corpus directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    try {
      format_for_path(entry.path());
      files.push_back(entry.path());
    } catch (const FormatError&) {
    }
  }
  if (files.empty()) {
    throw ConfigError("corpus directory has no images: " + dir.string());
  }
  std::sort(files.begin(), files.end());
  std::vector<ImageBuffer> images;
  images.reserve(files.size());
  for (const auto& f : files) images.push_back(as_rgb(read_image(f)));
  return images;
}

TrainResult train(const TrainConfig& config,
                  const std::vector<ImageBuffer>& content_corpus,
                  const std::vector<ImageBuffer>& style_corpus,
                  std::optional<Checkpoint> initial, const StepCallback& on_step) {
  config.validate();
  if (content_corpus.empty()) throw ConfigError("content corpus is empty");
  if (style_corpus.empty()) throw ConfigError("style corpus is empty");
  for (const auto* corpus : {&content_corpus, &style_corpus}) {
    for (const auto& img : *corpus) {
      if (img.width < config.crop_size || img.height < config.crop_size) {
        throw ConfigError("corpus image " + std::to_string(img.width) + "x" +
                          std::to_string(img.height) + " is smaller than crop " +
                          std::to_string(config.crop_size));
      }
    }
  }

  TrainResult result;
  result.checkpoint = initial ? std::move(*initial) : init_parameters(config.seed);
  validate_checkpoint(result.checkpoint);
  if (config.steps == 0) return result;

  ParameterSet& params = result.checkpoint.params;
  AdamState adam;
  adam.options.lr = config.lr;
  // Separate stream from parameter init so both stay reproducible.
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<std::size_t> pick_content(0, content_corpus.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_style(0, style_corpus.size() - 1);

  const std::size_t batch = config.batch_size;
  for (std::size_t step = 0; step < config.steps; ++step) {
    std::vector<ImageBuffer> contents, styles;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t ci = pick_content(rng);
      const std::size_t si = pick_style(rng);
      contents.push_back(random_crop(content_corpus[ci], config.crop_size, rng));
      styles.push_back(random_crop(style_corpus[si], config.crop_size, rng));
    }

    std::vector<ItemResult> items(batch);
    const auto n = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < n; ++b) {
      try {
        items[b] = evaluate_item(params, config, contents[b], styles[b]);
      } catch (...) {
        items[b].error = std::current_exception();
      }
    }

    LossTerms mean;
    ParameterSet grads;
    for (auto& item : items) {
      if (item.error) {
        try {
          std::rethrow_exception(item.error);
        } catch (const NumericError& e) {
          throw NumericError(std::string(e.what()) + " at step " + std::to_string(step));
        }
      }
      if (!std::isfinite(item.terms.total)) {
        throw NumericError("non-finite loss at step " + std::to_string(step));
      }
      mean.pixel_identity += item.terms.pixel_identity;
      mean.feature_identity += item.terms.feature_identity;
      mean.content_aux += item.terms.content_aux;
      mean.style_aux += item.terms.style_aux;
      mean.total += item.terms.total;
      if (grads.empty()) {
        grads = std::move(item.grads);
      } else {
        for (auto& [name, g] : grads) g += item.grads.at(name);
      }
    }
    const double inv = 1.0 / static_cast<double>(batch);
    mean.pixel_identity *= inv;
    mean.feature_identity *= inv;
    mean.content_aux *= inv;
    mean.style_aux *= inv;
    mean.total *= inv;
    for (auto& [name, g] : grads) {
      for (double& v : g.data()) v *= inv;
    }

    try {
      adam_step(params, grads, adam);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " at step " + std::to_string(step));
    }
    result.trace.push_back(mean);
    if (on_step) on_step(step, mean);
  }
  result.checkpoint.step += config.steps;
  result.checkpoint.config_digest = config.digest();
  return result;
}

TrainResult train(const TrainConfig& config, std::optional<Checkpoint> initial,
                  const StepCallback& on_step) {
  const auto content = load_corpus(config.content_dir);
  const auto style = load_corpus(config.style_dir);
  return train(config, content, style, std::move(initial), on_step);
}

void write_loss_trace(const std::vector<LossTerms>& trace,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write loss trace " + path.string());
  out << "step,pixel_identity,feature_identity,content_aux,style_aux,total\n";
  char line[256];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const LossTerms& t = trace[i];
    std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", i,
                  t.pixel_identity, t.feature_identity, t.content_aux,
                  t.style_aux, t.total);
    out << line;
  }
  if (!out) throw IoError("failed writing loss trace " + path.string());
}

double mean_total(const std::vector<LossTerms>& trace, std::size_t begin,
                  std::size_t count) {
  if (count == 0 || begin + count > trace.size()) {
    throw ConfigError("loss trace window out of range");
  }
  double acc = 0.0;
  for (std::size_t i = begin; i < begin + count; ++i) acc += trace[i].total;
  return acc / static_cast<double>(count);
}

}  // namespace pstyle
