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

#ifndef MMGD_TOOLS_COMMANDS_H_
#define MMGD_TOOLS_COMMANDS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mmgd/data.h"
#include "mmgd/loss.h"
#include "mmgd/metrics.h"
#include "mmgd/model.h"
#include "mmgd/optim.h"
#include "mmgd/predictions_io.h"
#include "mmgd/report.h"

namespace mmgd::tools {

enum class PhraseReduce { kMax, kMean };

// Everything a run depends on. Persisted verbatim as config.json.
struct RunConfig {
  ModelConfig model;
  LossConfig loss;
  AdamWOptions optim;
  // Dataset manifest paths.
  std::vector<std::string> datasets;
  std::string out = "run";
  std::uint64_t seed = 0;
  std::size_t steps = 100;
  std::size_t batch_size = 1;
  // Global gradient-norm clip; 0 disables.
  double grad_clip = 0.0;
  PhraseReduce phrase_reduce = PhraseReduce::kMax;
  FlickrProtocol flickr = FlickrProtocol::kAnyBox;
  LengthBuckets d3_buckets;
  std::vector<double> gref_thresholds = default_sweep_thresholds();
  // Detections scoring below the floor are dropped (non-REC modes).
  double score_floor = 0.0;
};

std::string config_to_json(const RunConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

std::string version_string();

// A sample with its image, resolved from a manifest.
struct LoadedSample {
  GroundingSample sample;
  Image image;
};

struct LoadedDataset {
  DatasetManifest manifest;
  std::vector<LoadedSample> items;
  // Clamped-box notices from loading.
  std::vector<std::string> warnings;
};

// Images are skipped when `load_images` is false (evaluating stored
// predictions needs only the annotations).
LoadedDataset load_dataset(const std::filesystem::path& manifest_path,
                           bool load_images = true);

struct TrainStep {
  std::size_t step = 0;
  double total = 0.0;
  double cls = 0.0;
  double l1 = 0.0;
  double giou = 0.0;
};

struct TrainResult {
  std::vector<TrainStep> curve;
  std::filesystem::path run_dir;
};

// Trains from the config, writing config.json, seed.txt, version.txt,
// vocab.txt, loss_curve.csv and model.{bin,manifest} into config.out.
// Throws NumericError naming the step and loss components when the loss
// stops being finite.
TrainResult cmd_train(const RunConfig& config);

enum class EvalMode { kOvd, kPg, kRec, kD3Concat, kD3Parallel };

EvalMode parse_eval_mode(const std::string& name);
std::string eval_mode_name(EvalMode mode);

struct EvalOptions {
  EvalMode mode = EvalMode::kOvd;
  // Run directory produced by cmd_train.
  std::filesystem::path run_dir;
  std::filesystem::path manifest;
  // Evaluate these predictions instead of running a model.
  std::optional<std::filesystem::path> predictions;
  std::optional<double> threshold;
  bool sweep = false;
  std::filesystem::path out = "eval";
};

// Loads a model from a run directory.
struct LoadedModel {
  RunConfig config;
  Vocabulary vocab;
  GroundingModel model;
};

LoadedModel load_run(const std::filesystem::path& run_dir);

// Model inference in the protocol of `mode`.
std::vector<PredictionRecord> predict(const LoadedModel& run,
                                      const LoadedDataset& data,
                                      EvalMode mode);

// Metrics of `mode` for predictions against the dataset ground truth.
EvalReport evaluate(const std::vector<PredictionRecord>& predictions,
                    const LoadedDataset& data, EvalMode mode,
                    const RunConfig& config, std::optional<double> threshold,
                    bool sweep);

// Writes predictions.jsonl, report.json and report.txt into options.out.
EvalReport cmd_eval(const EvalOptions& options,
                    const RunConfig& defaults = {});

struct ConvertSummary {
  std::size_t images = 0;
  std::size_t instances = 0;
  std::size_t dropped_crowd = 0;
  std::size_t dropped_degenerate = 0;
  std::size_t clamped = 0;
};

// COCO json -> <out>/annotations.jsonl + <out>/manifest.json.
ConvertSummary cmd_convert(const std::filesystem::path& coco_json,
                           const std::filesystem::path& out,
                           const std::string& name);

// Synthetic dataset -> <out>/annotations.jsonl, images, manifest.json.
void cmd_synth(const SynthSpec& spec, const std::filesystem::path& out);

// Parameter listing of a checkpoint stem or run directory.
std::string cmd_inspect(const std::filesystem::path& target);

// Ground truth of the dataset as predictions with score 1.
std::vector<PredictionRecord> ground_truth_predictions(
    const LoadedDataset& data, EvalMode mode);

}  // namespace mmgd::tools

#endif  // MMGD_TOOLS_COMMANDS_H_
