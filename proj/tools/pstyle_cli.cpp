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

// pstyle: train, stylize, portrait, segment and gradcheck subcommands.
//
// Exit codes: 0 success, 1 verification failure, 2 usage or configuration
// error, 3 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pstyle/error.hpp"
#include "pstyle/gradcheck.hpp"
#include "pstyle/image_io.hpp"
#include "pstyle/net_blocks.hpp"
#include "pstyle/pipeline.hpp"
#include "pstyle/segmentation.hpp"
#include "pstyle/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerify = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct Options {
  std::string config;
  std::uint64_t seed = 0;

  // train
  pstyle::TrainConfig train;
  std::string content_dir = "assets/toy/content";
  std::string style_dir = "assets/toy/style";
  std::string trace;

  // stylize / portrait / segment
  std::string ckpt;
  std::string out;
  std::string content;
  std::string style;
  double w1 = 1.0;
  double w2 = 1.0;
  std::string mask;
  std::string segment;
  double bg_w1 = pstyle::background_preset().fusion.w1;
  double bg_w2 = pstyle::background_preset().fusion.w2;
  double fg_w1 = pstyle::portrait_preset().fusion.w1;
  double fg_w2 = pstyle::portrait_preset().fusion.w2;
  std::size_t feather = 0;
  int threshold = pstyle::kDefaultMaskThreshold;
  bool debug_passes = false;
  std::string input;
  std::string method = "center_ellipse";
  double luma_min = 0.0;
  double luma_max = 1.0;

  // gradcheck
  double tol = 1e-4;
};

// Flags of the form "--name value" or "--name=value" located before parsing,
// so the JSON file can be applied as defaults that explicit flags override.
std::optional<std::string> find_flag(const std::vector<std::string>& args,
                                     const std::string& name) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == name && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind(name + "=", 0) == 0) return args[i].substr(name.size() + 1);
  }
  return std::nullopt;
}

std::string json_to_arg(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

// Keys are long flag names without the leading dashes, looked up on the
// selected subcommand first and then on the top-level app.
void apply_config_file(CLI::App& app, CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw pstyle::ConfigError("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw pstyle::ConfigError("config file " + path + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw pstyle::ConfigError("config file " + path + " must hold a JSON object");
  }
  for (const auto& [key, value] : doc.items()) {
    if (key == "config") throw pstyle::ConfigError("config files cannot nest");
    CLI::Option* opt = sub ? sub->get_option_no_throw("--" + key) : nullptr;
    if (!opt) opt = app.get_option_no_throw("--" + key);
    if (!opt) throw pstyle::ConfigError("unknown config key '" + key + "' in " + path);
    if (value.is_array() || value.is_object() || value.is_null()) {
      throw pstyle::ConfigError("config key '" + key + "' must be a scalar");
    }
    try {
      opt->default_val(json_to_arg(value));
    } catch (const CLI::Error& e) {
      throw pstyle::ConfigError("config key '" + key + "': " + e.what());
    }
  }
}

pstyle::Checkpoint checkpoint_or_init(const Options& o) {
  if (!o.ckpt.empty()) return pstyle::load_checkpoint(o.ckpt);
  std::cerr << "no --ckpt given; using untrained parameters from seed " << o.seed
            << "\n";
  return pstyle::init_parameters(o.seed);
}

void write_output(const pstyle::ImageBuffer& img, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  pstyle::write_image(img, path, pstyle::format_for_path(path));
}

fs::path with_suffix(const fs::path& path, const std::string& suffix) {
  fs::path p = path;
  p.replace_filename(path.stem().string() + suffix + path.extension().string());
  return p;
}

int cmd_train(Options& o) {
  pstyle::TrainConfig cfg = o.train;
  cfg.seed = o.seed;
  cfg.content_dir = o.content_dir;
  cfg.style_dir = o.style_dir;
  cfg.validate();
  const fs::path ckpt_path = o.ckpt.empty() ? fs::path("pstyle.ckpt") : fs::path(o.ckpt);

  const auto result = pstyle::train(cfg, std::nullopt, [](std::size_t step, const pstyle::LossTerms& t) {
    if (step % 10 == 0) {
      std::printf("step %4zu  total %.6g  pixel %.6g  feature %.6g\n", step,
                  t.total, t.pixel_identity, t.feature_identity);
      std::fflush(stdout);
    }
  });
  if (ckpt_path.has_parent_path()) fs::create_directories(ckpt_path.parent_path());
  pstyle::save_checkpoint(result.checkpoint, ckpt_path);
  if (!o.trace.empty()) pstyle::write_loss_trace(result.trace, o.trace);

  if (result.trace.empty()) {
    std::printf("0 steps; wrote initial checkpoint %s\n", ckpt_path.string().c_str());
    return kExitOk;
  }
  const auto& last = result.trace.back();
  std::printf("final  total %.6g  pixel_identity %.6g  feature_identity %.6g  "
              "content_aux %.6g  style_aux %.6g\n",
              last.total, last.pixel_identity, last.feature_identity,
              last.content_aux, last.style_aux);
  std::printf("wrote %s\n", ckpt_path.string().c_str());
  return kExitOk;
}

int cmd_stylize(const Options& o) {
  const auto content = pstyle::read_image(o.content);
  const auto style = pstyle::read_image(o.style);
  const auto ckpt = checkpoint_or_init(o);
  const auto out = pstyle::stylize(content, style, {o.w1, o.w2}, ckpt);
  write_output(out, o.out);
  std::printf("wrote %s (%zux%zu)\n", o.out.c_str(), out.width, out.height);
  return kExitOk;
}

int cmd_portrait(const Options& o) {
  if (o.mask.empty() == o.segment.empty()) {
    throw pstyle::ConfigError("portrait needs exactly one of --mask or --segment");
  }
  const auto content = pstyle::read_image(o.content);
  const auto style = pstyle::read_image(o.style);
  pstyle::Mask mask;
  if (!o.mask.empty()) {
    mask = pstyle::load_mask(o.mask, static_cast<std::uint8_t>(o.threshold));
  } else {
    pstyle::SegmentParams params;
    params.luma_min = o.luma_min;
    params.luma_max = o.luma_max;
    mask = pstyle::trivial_segment(content, pstyle::parse_segment_method(o.segment), params);
    bool any = false;
    for (double v : mask.data) any = any || v > 0.0;
    if (!any) throw pstyle::ConfigError("segmentation '" + o.segment + "' found no subject");
  }

  pstyle::PassPreset bg = pstyle::background_preset();
  pstyle::PassPreset fg = pstyle::portrait_preset();
  bg.fusion = {o.bg_w1, o.bg_w2};
  fg.fusion = {o.fg_w1, o.fg_w2};
  const auto ckpt = checkpoint_or_init(o);
  const auto result = pstyle::portrait_stylize(content, style, mask, bg, fg, ckpt, o.feather);

  write_output(result.image, o.out);
  std::printf("wrote %s\n", o.out.c_str());
  if (o.debug_passes) {
    const fs::path bg_path = with_suffix(o.out, ".background");
    const fs::path fg_path = with_suffix(o.out, ".portrait");
    write_output(result.background_pass, bg_path);
    write_output(result.portrait_pass, fg_path);
    std::printf("wrote %s\nwrote %s\n", bg_path.string().c_str(), fg_path.string().c_str());
  }
  return kExitOk;
}

int cmd_segment(const Options& o) {
  const auto img = pstyle::read_image(o.input);
  pstyle::SegmentParams params;
  params.luma_min = o.luma_min;
  params.luma_max = o.luma_max;
  const auto mask = pstyle::trivial_segment(img, pstyle::parse_segment_method(o.method), params);
  write_output(pstyle::mask_to_image(mask), o.out);
  std::printf("wrote %s\n", o.out.c_str());
  return kExitOk;
}

int cmd_gradcheck(const Options& o) {
  const auto report = pstyle::run_gradcheck(o.seed, o.tol);
  report.print(std::cout);
  if (report.all_passed()) return kExitOk;
  std::cout << "failing:";
  for (const auto& r : report.results) {
    if (!r.passed) std::cout << ' ' << r.name;
  }
  std::cout << "\n";
  return kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mask-aware style transfer for portraits"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --seed and --config follow the subcommand
  Options o;
  app.add_option("--config", o.config, "JSON file of flag defaults; explicit flags win");
  app.add_option("--seed", o.seed, "Seed for initialisation, sampling and gradcheck")
      ->capture_default_str();

  auto* train = app.add_subcommand("train", "Train on content and style corpora");
  train->add_option("--content-dir", o.content_dir)->capture_default_str();
  train->add_option("--style-dir", o.style_dir)->capture_default_str();
  train->add_option("--steps", o.train.steps)->capture_default_str();
  train->add_option("--batch", o.train.batch_size)->capture_default_str();
  train->add_option("--lr", o.train.lr)->capture_default_str();
  train->add_option("--crop", o.train.crop_size)->capture_default_str();
  train->add_option("--lambda1", o.train.weights.identity_pixel)->capture_default_str();
  train->add_option("--lambda2", o.train.weights.identity_feature)->capture_default_str();
  train->add_option("--content-weight", o.train.weights.content)->capture_default_str();
  train->add_option("--style-weight", o.train.weights.style)->capture_default_str();
  train->add_option("--train-w1", o.train.fusion.w1)->capture_default_str();
  train->add_option("--train-w2", o.train.fusion.w2)->capture_default_str();
  train->add_option("--ckpt", o.ckpt, "Checkpoint to write (default pstyle.ckpt)");
  train->add_option("--trace", o.trace, "CSV loss trace to write");

  auto* stylize = app.add_subcommand("stylize", "Single transfer pass");
  stylize->add_option("--content", o.content)->required();
  stylize->add_option("--style", o.style)->required();
  stylize->add_option("--w1", o.w1)->capture_default_str();
  stylize->add_option("--w2", o.w2)->capture_default_str();
  stylize->add_option("--ckpt", o.ckpt);
  stylize->add_option("--out", o.out)->required();

  auto* portrait = app.add_subcommand("portrait", "Two passes composited through a mask");
  portrait->add_option("--content", o.content)->required();
  portrait->add_option("--style", o.style)->required();
  portrait->add_option("--mask", o.mask, "Grayscale PNG/PGM mask");
  portrait->add_option("--segment", o.segment, "center_ellipse or luma_threshold");
  portrait->add_option("--luma-min", o.luma_min)->capture_default_str();
  portrait->add_option("--luma-max", o.luma_max)->capture_default_str();
  portrait->add_option("--bg-w1", o.bg_w1)->capture_default_str();
  portrait->add_option("--bg-w2", o.bg_w2)->capture_default_str();
  portrait->add_option("--fg-w1", o.fg_w1)->capture_default_str();
  portrait->add_option("--fg-w2", o.fg_w2)->capture_default_str();
  portrait->add_option("--feather", o.feather)->capture_default_str();
  portrait->add_option("--threshold", o.threshold)->check(CLI::Range(0, 255))->capture_default_str();
  portrait->add_option("--ckpt", o.ckpt);
  portrait->add_option("--out", o.out)->required();
  portrait->add_flag("--debug-passes", o.debug_passes,
                     "Also write <out>.background and <out>.portrait pass images");

  auto* segment = app.add_subcommand("segment", "Write a trivial subject mask");
  segment->add_option("--input", o.input)->required();
  segment->add_option("--method", o.method)->capture_default_str();
  segment->add_option("--luma-min", o.luma_min)->capture_default_str();
  segment->add_option("--luma-max", o.luma_max)->capture_default_str();
  segment->add_option("--out", o.out)->required();

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  gradcheck->add_option("--tol", o.tol)->capture_default_str();

  try {
    const std::vector<std::string> args(argv + 1, argv + argc);
    if (const auto path = find_flag(args, "--config")) {
      CLI::App* sub = nullptr;
      for (const auto& a : args) {
        if (auto* s = app.get_subcommand_no_throw(a)) {
          sub = s;
          break;
        }
      }
      apply_config_file(app, sub, *path);
    }
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  } catch (const pstyle::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train(o);
    if (*stylize) return cmd_stylize(o);
    if (*portrait) return cmd_portrait(o);
    if (*segment) return cmd_segment(o);
    if (*gradcheck) return cmd_gradcheck(o);
  } catch (const pstyle::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const pstyle::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
