// Copyright 2026 The mmgd Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mmgd/error.h"
#include "mmgd_tools/commands.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

using mmgd::tools::RunConfig;

RunConfig resolve(const std::string& config_path,
                  const std::optional<std::uint64_t>& seed,
                  const std::string& out) {
  RunConfig config;
  if (!config_path.empty()) config = mmgd::tools::load_config(config_path);
  if (seed) config.seed = *seed;
  if (!out.empty()) config.out = out;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmgd: desk-scale open-vocabulary grounding detector"};
  app.set_version_flag("--version", mmgd::tools::version_string());
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Run config (JSON)");
    cmd->add_option("--seed", seed, "Random seed");
    cmd->add_option("--out", out, "Output directory");
  };

  auto* train = app.add_subcommand("train", "Train on dataset manifests");
  add_common(train);
  std::optional<std::size_t> steps;
  std::vector<std::string> manifests;
  train->add_option("--steps", steps, "Optimizer steps");
  train->add_option("--manifest", manifests, "Dataset manifest (repeatable)");

  std::string mode = "ovd";
  std::string run_dir;
  std::string eval_manifest;
  std::string predictions;
  std::optional<double> threshold;
  bool sweep = false;
  auto add_eval = [&](CLI::App* cmd) {
    add_common(cmd);
    cmd->add_option("--mode", mode, "Evaluation protocol")
        ->check(CLI::IsMember(
            {"ovd", "pg", "rec", "d3-concat", "d3-parallel"}));
    cmd->add_option("--run", run_dir, "Run directory from train");
    cmd->add_option("--manifest", eval_manifest, "Dataset manifest")
        ->required();
    cmd->add_option("--predictions", predictions,
                    "Evaluate predictions.jsonl instead of a model");
    cmd->add_option("--threshold", threshold, "Score threshold")
        ->check(CLI::Range(0.0, 1.0));
  };
  auto* eval = app.add_subcommand("eval", "Evaluate a run or predictions");
  add_eval(eval);
  eval->add_flag("--sweep", sweep, "gRefCOCO threshold sweep (rec mode)");
  auto* sweep_cmd =
      app.add_subcommand("sweep", "gRefCOCO threshold sweep (rec mode)");
  add_eval(sweep_cmd);

  auto* convert = app.add_subcommand("convert", "COCO json to unified JSONL");
  add_common(convert);
  std::string coco;
  std::string name = "converted";
  convert->add_option("--input", coco, "COCO detection json")->required();
  convert->add_option("--name", name, "Dataset name");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  add_common(synth);
  mmgd::SynthSpec spec;
  synth->add_option("--images", spec.n_images, "Number of images");
  synth->add_option("--categories", spec.n_categories, "Number of categories");
  synth->add_option("--boxes", spec.boxes_per_image, "Boxes per image");
  synth->add_option("--size", spec.image_size, "Image side in pixels");

  auto* inspect = app.add_subcommand("inspect", "List checkpoint parameters");
  add_common(inspect);
  std::string target;
  inspect->add_option("target", target, "Run directory or checkpoint stem")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; malformed flags are config errors.
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train) {
      RunConfig config = resolve(config_path, seed, out);
      if (steps) config.steps = *steps;
      if (!manifests.empty()) config.datasets = manifests;
      const auto result = mmgd::tools::cmd_train(config);
      if (!result.curve.empty()) {
        const auto& first = result.curve.front();
        const auto& last = result.curve.back();
        std::printf("steps %zu  loss %.6f -> %.6f\n", result.curve.size(),
                    first.total, last.total);
      }
      std::printf("run directory: %s\n", result.run_dir.string().c_str());
    } else if (*eval || *sweep_cmd) {
      mmgd::tools::EvalOptions opts;
      opts.mode = mmgd::tools::parse_eval_mode(mode);
      opts.run_dir = run_dir;
      opts.manifest = eval_manifest;
      if (!predictions.empty()) opts.predictions = predictions;
      opts.threshold = threshold;
      opts.sweep = sweep || *sweep_cmd;
      const RunConfig defaults = resolve(config_path, seed, "");
      opts.out = out.empty() ? std::string("eval") : out;
      const auto report = mmgd::tools::cmd_eval(opts, defaults);
      std::cout << report.to_text();
    } else if (*convert) {
      const auto s = mmgd::tools::cmd_convert(
          coco, out.empty() ? std::string("converted") : out, name);
      std::printf(
          "images %zu  instances %zu  dropped_crowd %zu  "
          "dropped_degenerate %zu  clamped %zu\n",
          s.images, s.instances, s.dropped_crowd, s.dropped_degenerate,
          s.clamped);
    } else if (*synth) {
      if (!config_path.empty()) {
        throw mmgd::ConfigError("synth takes flags, not --config");
      }
      if (seed) spec.seed = *seed;
      mmgd::tools::cmd_synth(spec, out.empty() ? std::string("synth") : out);
    } else if (*inspect) {
      std::cout << mmgd::tools::cmd_inspect(target);
    }
  } catch (const mmgd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const mmgd::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const mmgd::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return kExitOk;
}
