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

#include "mmgd_tools/commands.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "mmgd/checkpoint.h"
#include "mmgd/error.h"
#include "mmgd/ops.h"
#include "mmgd/text.h"

#ifndef MMGD_VERSION_STRING
#define MMGD_VERSION_STRING "v0.0.0-unknown"
#endif

namespace mmgd::tools {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json weights_json(const LossWeights& w) {
  return {{"cls", w.cls}, {"l1", w.l1}, {"giou", w.giou}};
}

void read_weights(const json& j, LossWeights& w, const std::string& where) {
  check_keys(j, {"cls", "l1", "giou"}, where);
  read(j, "cls", w.cls);
  read(j, "l1", w.l1);
  read(j, "giou", w.giou);
}

std::string flickr_name(FlickrProtocol p) {
  return p == FlickrProtocol::kAnyBox ? "any" : "merged";
}

FlickrProtocol parse_flickr(const std::string& s) {
  if (s == "any") return FlickrProtocol::kAnyBox;
  if (s == "merged") return FlickrProtocol::kMergedBox;
  throw ConfigError("flickr_protocol must be any or merged, got '" + s + "'");
}

std::string reduce_name(PhraseReduce r) {
  return r == PhraseReduce::kMax ? "max" : "mean";
}

PhraseReduce parse_reduce(const std::string& s) {
  if (s == "max") return PhraseReduce::kMax;
  if (s == "mean") return PhraseReduce::kMean;
  throw ConfigError("phrase_reduce must be max or mean, got '" + s + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string threshold_key(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", t);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

struct PreparedSample {
  const LoadedSample* item;
  TokenizedCaption tokens;
  GroundTruth gt;
};

PreparedSample prepare(const LoadedSample& item, const Vocabulary& vocab,
                       std::size_t max_len) {
  PreparedSample p{&item, {}, {}};
  const AssembledCaption cap = sample_caption(item.sample);
  p.tokens = tokenize(cap.caption, vocab, max_len, cap.phrases);
  std::vector<int> ids;
  for (const auto& inst : item.sample.instances) {
    ids.push_back(item.sample.label_of(inst));
    p.gt.boxes.push_back(
        normalize(inst.box, item.sample.width, item.sample.height));
  }
  p.gt.positive_map = build_positive_map(p.tokens, ids);
  return p;
}

Vocabulary build_vocab(const std::vector<const LoadedSample*>& items) {
  std::vector<std::string> texts;
  for (const auto* item : items) {
    texts.push_back(sample_caption(item->sample).caption);
  }
  return Vocabulary::from_texts(texts);
}

double grad_norm_clip(ParameterStore& params, double max_norm) {
  double sq = 0;
  for (const auto& [name, t] : params.entries()) {
    for (double g : t.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (const auto& [name, t] : params.entries()) {
      for (double& g : t.node()->grad) g *= s;
    }
  }
  return norm;
}

BoxXYXY to_pixels(const Tensor& boxes, std::size_t q, int w, int h) {
  BoxCxCyWh c{boxes.at(q, 0), boxes.at(q, 1), boxes.at(q, 2), boxes.at(q, 3)};
  BoxXYXY b = denormalize(c, w, h);
  b.x1 = std::clamp(b.x1, 0.0, static_cast<double>(w));
  b.x2 = std::clamp(b.x2, 0.0, static_cast<double>(w));
  b.y1 = std::clamp(b.y1, 0.0, static_cast<double>(h));
  b.y2 = std::clamp(b.y2, 0.0, static_cast<double>(h));
  return b;
}

double phrase_score(const Tensor& logits, std::size_t q,
                    const PhraseGroup& group, PhraseReduce reduce) {
  double best = 0, sum = 0;
  for (std::size_t t : group.tokens) {
    const double p = 1.0 / (1.0 + std::exp(-logits.at(q, t)));
    best = std::max(best, p);
    sum += p;
  }
  return reduce == PhraseReduce::kMax
             ? best
             : sum / static_cast<double>(group.tokens.size());
}

void require_tasks(const LoadedDataset& data, std::set<Task> allowed,
                   EvalMode mode) {
  for (const auto& item : data.items) {
    if (!allowed.count(item.sample.task)) {
      throw ConfigError("eval mode " + eval_mode_name(mode) +
                        " cannot evaluate " +
                        std::string(task_name(item.sample.task)) +
                        " samples");
    }
  }
}

void check_mode(const LoadedDataset& data, EvalMode mode) {
  switch (mode) {
    case EvalMode::kOvd: require_tasks(data, {Task::kOvd}, mode); break;
    case EvalMode::kPg: require_tasks(data, {Task::kPg}, mode); break;
    case EvalMode::kRec: require_tasks(data, {Task::kRec}, mode); break;
    default: require_tasks(data, {Task::kPg, Task::kRec}, mode); break;
  }
}

std::size_t token_count(const std::string& text) {
  return tokenize(text, Vocabulary(), std::string::npos).size();
}

}  // namespace

std::string version_string() { return MMGD_VERSION_STRING; }

std::string config_to_json(const RunConfig& c) {
  json j;
  const ModelConfig& m = c.model;
  j["model"] = {{"d_model", m.d_model},
                {"n_heads", m.n_heads},
                {"n_enhancer_layers", m.n_enhancer_layers},
                {"n_decoder_layers", m.n_decoder_layers},
                {"num_query", m.num_query},
                {"n_feature_levels", m.n_feature_levels},
                {"deformable_points", m.deformable_points},
                {"ffn_dim", m.ffn_dim},
                {"bias_prior", m.bias_prior},
                {"vocab_size", m.vocab_size},
                {"max_text_len", m.max_text_len},
                {"selection_similarity",
                 std::string(similarity_name(m.selection_similarity))},
                {"cross_phrase_mask", m.cross_phrase_mask},
                {"text_positional", m.text_positional},
                {"detach_anchors", m.detach_anchors},
                {"patch_size", m.patch_size}};
  j["loss"] = {{"weights", weights_json(c.loss.loss)},
               {"matching", weights_json(c.loss.matching)},
               {"focal",
                {{"alpha", c.loss.focal.alpha}, {"gamma", c.loss.focal.gamma}}}};
  j["optim"] = {{"lr", c.optim.lr},
                {"beta1", c.optim.beta1},
                {"beta2", c.optim.beta2},
                {"eps", c.optim.eps},
                {"weight_decay", c.optim.weight_decay}};
  j["datasets"] = c.datasets;
  j["out"] = c.out;
  j["seed"] = c.seed;
  j["steps"] = c.steps;
  j["batch_size"] = c.batch_size;
  j["grad_clip"] = c.grad_clip;
  j["phrase_reduce"] = reduce_name(c.phrase_reduce);
  j["flickr_protocol"] = flickr_name(c.flickr);
  j["d3_buckets"] = {{"short_max", c.d3_buckets.short_max},
                     {"middle_max", c.d3_buckets.middle_max},
                     {"long_max", c.d3_buckets.long_max}};
  j["gref_thresholds"] = c.gref_thresholds;
  j["score_floor"] = c.score_floor;
  return j.dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  RunConfig c;
  try {
    check_keys(j,
               {"model", "loss", "optim", "datasets", "out", "seed", "steps",
                "batch_size", "grad_clip", "phrase_reduce", "flickr_protocol",
                "d3_buckets", "gref_thresholds", "score_floor"},
               "config");
    if (j.contains("model")) {
      const json& m = j.at("model");
      check_keys(m,
                 {"d_model", "n_heads", "n_enhancer_layers",
                  "n_decoder_layers", "num_query", "n_feature_levels",
                  "deformable_points", "ffn_dim", "bias_prior", "vocab_size",
                  "max_text_len", "selection_similarity", "cross_phrase_mask",
                  "text_positional", "detach_anchors", "patch_size"},
                 "model");
      ModelConfig& mc = c.model;
      read(m, "d_model", mc.d_model);
      read(m, "n_heads", mc.n_heads);
      read(m, "n_enhancer_layers", mc.n_enhancer_layers);
      read(m, "n_decoder_layers", mc.n_decoder_layers);
      read(m, "num_query", mc.num_query);
      read(m, "n_feature_levels", mc.n_feature_levels);
      read(m, "deformable_points", mc.deformable_points);
      read(m, "ffn_dim", mc.ffn_dim);
      read(m, "bias_prior", mc.bias_prior);
      read(m, "vocab_size", mc.vocab_size);
      read(m, "max_text_len", mc.max_text_len);
      if (m.contains("selection_similarity")) {
        mc.selection_similarity =
            parse_similarity(m.at("selection_similarity").get<std::string>());
      }
      read(m, "cross_phrase_mask", mc.cross_phrase_mask);
      read(m, "text_positional", mc.text_positional);
      read(m, "detach_anchors", mc.detach_anchors);
      read(m, "patch_size", mc.patch_size);
    }
    if (j.contains("loss")) {
      const json& l = j.at("loss");
      check_keys(l, {"weights", "matching", "focal"}, "loss");
      if (l.contains("weights")) {
        read_weights(l.at("weights"), c.loss.loss, "loss.weights");
      }
      if (l.contains("matching")) {
        read_weights(l.at("matching"), c.loss.matching, "loss.matching");
      }
      if (l.contains("focal")) {
        check_keys(l.at("focal"), {"alpha", "gamma"}, "loss.focal");
        read(l.at("focal"), "alpha", c.loss.focal.alpha);
        read(l.at("focal"), "gamma", c.loss.focal.gamma);
      }
    }
    if (j.contains("optim")) {
      const json& o = j.at("optim");
      check_keys(o, {"lr", "beta1", "beta2", "eps", "weight_decay"}, "optim");
      read(o, "lr", c.optim.lr);
      read(o, "beta1", c.optim.beta1);
      read(o, "beta2", c.optim.beta2);
      read(o, "eps", c.optim.eps);
      read(o, "weight_decay", c.optim.weight_decay);
    }
    read(j, "datasets", c.datasets);
    read(j, "out", c.out);
    read(j, "seed", c.seed);
    read(j, "steps", c.steps);
    read(j, "batch_size", c.batch_size);
    read(j, "grad_clip", c.grad_clip);
    if (j.contains("phrase_reduce")) {
      c.phrase_reduce = parse_reduce(j.at("phrase_reduce").get<std::string>());
    }
    if (j.contains("flickr_protocol")) {
      c.flickr = parse_flickr(j.at("flickr_protocol").get<std::string>());
    }
    if (j.contains("d3_buckets")) {
      const json& b = j.at("d3_buckets");
      check_keys(b, {"short_max", "middle_max", "long_max"}, "d3_buckets");
      read(b, "short_max", c.d3_buckets.short_max);
      read(b, "middle_max", c.d3_buckets.middle_max);
      read(b, "long_max", c.d3_buckets.long_max);
    }
    read(j, "gref_thresholds", c.gref_thresholds);
    read(j, "score_floor", c.score_floor);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  if (c.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (c.grad_clip < 0) throw ConfigError("grad_clip must be >= 0");
  if (!std::is_sorted(c.gref_thresholds.begin(), c.gref_thresholds.end())) {
    throw ConfigError("gref_thresholds must be ascending");
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

LoadedDataset load_dataset(const fs::path& manifest_path, bool load_images) {
  LoadedDataset data;
  data.manifest = load_manifest(manifest_path);
  LoadResult loaded = load_unified(data.manifest.path);
  data.warnings = std::move(loaded.warnings);
  for (const auto& w : data.warnings) std::cerr << "warning: " << w << '\n';
  const fs::path dir = data.manifest.path.parent_path();
  for (auto& s : loaded.samples) {
    LoadedSample item;
    if (load_images) {
      item.image = read_ppm(dir / s.file_name);
      if (item.image.width != s.width || item.image.height != s.height) {
        throw DataError("image " + s.file_name + " size disagrees with record");
      }
    }
    item.sample = std::move(s);
    data.items.push_back(std::move(item));
  }
  return data;
}

TrainResult cmd_train(const RunConfig& config_in) {
  RunConfig config = config_in;
  config.model.seed = config.seed;
  if (config.datasets.empty()) throw ConfigError("no training datasets");

  std::vector<LoadedDataset> datasets;
  for (const auto& path : config.datasets) {
    datasets.push_back(load_dataset(path));
  }
  std::vector<const LoadedSample*> items;
  std::size_t chunk = 0;
  for (const auto& d : datasets) {
    for (const auto& item : d.items) items.push_back(&item);
    if (d.manifest.chunk_size && chunk == 0) chunk = *d.manifest.chunk_size;
  }
  if (items.empty()) throw DataError("training datasets are empty");
  if (chunk == 0) chunk = items.size();

  const Vocabulary vocab = build_vocab(items);
  config.model.vocab_size = std::max(config.model.vocab_size, vocab.size());
  config.model.validate();

  std::vector<PreparedSample> prepared;
  for (const auto* item : items) {
    prepared.push_back(prepare(*item, vocab, config.model.max_text_len));
  }

  GroundingModel model(config.model);
  const fs::path dir = config.out;
  fs::create_directories(dir);
  write_text(dir / "config.json", config_to_json(config));
  write_text(dir / "seed.txt", std::to_string(config.seed) + "\n");
  write_text(dir / "version.txt", version_string() + "\n");
  vocab.save(dir / "vocab.txt");

  AdamW optimizer(model.parameters().tensors(), config.optim);
  TrainResult result;
  result.run_dir = dir;

  std::size_t epoch = 0;
  IndexRange range = epoch_partition(items.size(), chunk, epoch);
  std::size_t cursor = range.begin;
  const double inv_batch = 1.0 / static_cast<double>(config.batch_size);

  for (std::size_t step = 1; step <= config.steps; ++step) {
    optimizer.zero_grad();
    TrainStep row;
    row.step = step;
    try {
      for (std::size_t b = 0; b < config.batch_size; ++b) {
        if (cursor >= range.end) {
          range = epoch_partition(items.size(), chunk, ++epoch);
          cursor = range.begin;
        }
        const PreparedSample& p = prepared[cursor++];
        const Prediction pred = model.forward(p.item->image, p.tokens);
        const LossBreakdown loss = total_loss(pred, p.gt, config.loss);
        row.total += loss.total_value * inv_batch;
        row.cls += loss.cls * inv_batch;
        row.l1 += loss.l1 * inv_batch;
        row.giou += loss.giou * inv_batch;
        if (!std::isfinite(loss.total_value)) break;
        backward(ops::scale(loss.total, inv_batch));
      }
    } catch (const NumericError& e) {
      throw NumericError("non-finite value at step " + std::to_string(step) +
                         ": " + e.what());
    }
    if (!std::isfinite(row.total)) {
      throw NumericError("non-finite loss at step " + std::to_string(step) +
                         " (total=" + fmt(row.total) + " cls=" + fmt(row.cls) +
                         " l1=" + fmt(row.l1) + " giou=" + fmt(row.giou) +
                         ")");
    }
    grad_norm_clip(model.parameters(), config.grad_clip);
    optimizer.step();
    result.curve.push_back(row);
  }

  std::ostringstream csv;
  csv << "step,total,cls,l1,giou\n";
  for (const auto& r : result.curve) {
    csv << r.step << ',' << fmt(r.total) << ',' << fmt(r.cls) << ','
        << fmt(r.l1) << ',' << fmt(r.giou) << '\n';
  }
  write_text(dir / "loss_curve.csv", csv.str());
  save_checkpoint(dir / "model", model.parameters());
  return result;
}

EvalMode parse_eval_mode(const std::string& name) {
  if (name == "ovd") return EvalMode::kOvd;
  if (name == "pg") return EvalMode::kPg;
  if (name == "rec") return EvalMode::kRec;
  if (name == "d3-concat") return EvalMode::kD3Concat;
  if (name == "d3-parallel") return EvalMode::kD3Parallel;
  throw ConfigError("unknown eval mode '" + name + "'");
}

std::string eval_mode_name(EvalMode mode) {
  switch (mode) {
    case EvalMode::kOvd: return "ovd";
    case EvalMode::kPg: return "pg";
    case EvalMode::kRec: return "rec";
    case EvalMode::kD3Concat: return "d3-concat";
    case EvalMode::kD3Parallel: return "d3-parallel";
  }
  return "ovd";
}

LoadedModel load_run(const fs::path& run_dir) {
  RunConfig config = load_config(run_dir / "config.json");
  config.model.seed = config.seed;
  Vocabulary vocab = Vocabulary::load(run_dir / "vocab.txt");
  GroundingModel model(config.model);
  load_checkpoint(run_dir / "model", model.parameters());
  return {std::move(config), std::move(vocab), std::move(model)};
}

std::vector<PredictionRecord> predict(const LoadedModel& run,
                                      const LoadedDataset& data,
                                      EvalMode mode) {
  check_mode(data, mode);
  const std::size_t max_len = run.config.model.max_text_len;
  const PhraseReduce reduce = run.config.phrase_reduce;
  std::vector<PredictionRecord> out;
  for (const auto& item : data.items) {
    const GroundingSample& s = item.sample;
    auto emit_all = [&](const TokenizedCaption& tokens,
                        const std::vector<int>& phrase_ids) {
      const Prediction pred = run.model.forward(item.image, tokens);
      const LayerPrediction& last = pred.final_layer();
      const std::size_t nq = last.boxes.dim(0);
      for (int id : phrase_ids) {
        const PhraseGroup* g = tokens.find_group(id);
        for (std::size_t q = 0; q < nq; ++q) {
          PredictionRecord r;
          r.image_id = s.image_id;
          r.box = to_pixels(last.boxes, q, s.width, s.height);
          r.score = phrase_score(last.logits, q, *g, reduce);
          r.label_id = id;
          r.phrase_id = id;
          out.push_back(r);
        }
      }
    };
    if (mode == EvalMode::kOvd) {
      const AssembledCaption cap = sample_caption(s);
      const TokenizedCaption tokens =
          tokenize(cap.caption, run.vocab, max_len, cap.phrases);
      const Prediction pred = run.model.forward(item.image, tokens);
      const LayerPrediction& last = pred.final_layer();
      for (std::size_t q = 0; q < last.boxes.dim(0); ++q) {
        double best = -1;
        int label = -1;
        for (const auto& g : tokens.phrase_groups) {
          const double v = phrase_score(last.logits, q, g, reduce);
          if (v > best) {
            best = v;
            label = g.phrase_id;
          }
        }
        PredictionRecord r;
        r.image_id = s.image_id;
        r.box = to_pixels(last.boxes, q, s.width, s.height);
        r.score = best;
        r.label_id = label;
        out.push_back(r);
      }
    } else if (mode == EvalMode::kD3Parallel) {
      for (const auto& p : s.phrases) {
        const std::string text = s.caption.substr(p.begin, p.end - p.begin);
        const PhraseSpan span{p.id, 0, text.size(), p.tag};
        emit_all(tokenize(text, run.vocab, max_len, {&span, 1}), {p.id});
      }
    } else {
      std::vector<int> ids;
      for (const auto& p : s.phrases) ids.push_back(p.id);
      emit_all(tokenize(s.caption, run.vocab, max_len, s.phrases), ids);
    }
  }
  return out;
}

std::vector<PredictionRecord> ground_truth_predictions(
    const LoadedDataset& data, EvalMode mode) {
  std::vector<PredictionRecord> out;
  for (const auto& item : data.items) {
    for (const auto& inst : item.sample.instances) {
      PredictionRecord r;
      r.image_id = item.sample.image_id;
      r.box = inst.box;
      r.score = 1.0;
      r.label_id = item.sample.label_of(inst);
      if (mode != EvalMode::kOvd) r.phrase_id = r.label_id;
      out.push_back(r);
    }
  }
  return out;
}

EvalReport evaluate(const std::vector<PredictionRecord>& predictions,
                    const LoadedDataset& data, EvalMode mode,
                    const RunConfig& config, std::optional<double> threshold,
                    bool sweep) {
  if (sweep && mode != EvalMode::kRec) {
    throw ConfigError("--sweep applies to rec mode only");
  }
  check_mode(data, mode);
  const double floor =
      mode == EvalMode::kRec ? 0.0 : threshold.value_or(config.score_floor);

  std::vector<GroundTruthBox> gts;
  std::size_t n_images = 0;
  for (const auto& item : data.items) {
    ++n_images;
    for (const auto& inst : item.sample.instances) {
      gts.push_back({item.sample.image_id, inst.box,
                     item.sample.label_of(inst)});
    }
  }
  std::vector<Detection> dets;
  for (const auto& r : predictions) {
    if (r.score < floor) continue;
    const int label =
        mode != EvalMode::kOvd && r.phrase_id >= 0 ? r.phrase_id : r.label_id;
    dets.push_back({r.image_id, r.box, r.score, label});
  }

  EvalReport report;
  report.info["mode"] = eval_mode_name(mode);
  report.info["version"] = version_string();
  report.counts["images"] = static_cast<std::int64_t>(n_images);
  report.counts["gt_boxes"] = static_cast<std::int64_t>(gts.size());
  report.counts["detections"] = static_cast<std::int64_t>(dets.size());

  switch (mode) {
    case EvalMode::kOvd: {
      const ApResult ap = average_precision(dets, gts);
      report.metrics["mAP"] = ap.mean_ap();
      report.metrics["AP50"] = ap.labels.empty()
                                   ? -1
                                   : ap.mean_ap_at(ap.threshold_index(0.5));
      report.metrics["AP75"] = ap.labels.empty()
                                   ? -1
                                   : ap.mean_ap_at(ap.threshold_index(0.75));
      auto& per_t = report.partitions["iou_threshold"];
      for (std::size_t t = 0; t < ap.thresholds.size(); ++t) {
        per_t[threshold_key(ap.thresholds[t])] =
            ap.labels.empty() ? -1 : ap.mean_ap_at(t);
      }
      const auto& cats = data.manifest.categories;
      auto cat_name = [&](int id) {
        return id >= 0 && id < static_cast<int>(cats.size())
                   ? cats[id]
                   : std::to_string(id);
      };
      auto& per_cat = report.partitions["category"];
      for (int label : ap.labels) per_cat[cat_name(label)] = ap.label_ap(label);
      report.counts["categories_evaluated"] =
          static_cast<std::int64_t>(ap.labels.size());
      report.counts["categories_excluded"] =
          static_cast<std::int64_t>(ap.skipped_labels.size());
      std::map<std::string, int> index;
      for (std::size_t i = 0; i < cats.size(); ++i) {
        index[cats[i]] = static_cast<int>(i);
      }
      if (!data.manifest.frequency.empty()) {
        std::map<int, FrequencyBucket> buckets;
        for (const auto& [name, b] : data.manifest.frequency) {
          buckets[index.at(name)] = b == "r"   ? FrequencyBucket::kRare
                                    : b == "c" ? FrequencyBucket::kCommon
                                               : FrequencyBucket::kFrequent;
        }
        const LvisResult lvis = lvis_style_ap(dets, gts, buckets);
        report.partitions["frequency"] = {{"rare", lvis.ap_rare},
                                          {"common", lvis.ap_common},
                                          {"frequent", lvis.ap_frequent}};
        report.metrics["APr"] = lvis.ap_rare;
        report.metrics["APc"] = lvis.ap_common;
        report.metrics["APf"] = lvis.ap_frequent;
      }
      if (!data.manifest.base.empty() || !data.manifest.novel.empty()) {
        std::set<int> base, novel;
        for (const auto& n : data.manifest.base) base.insert(index.at(n));
        for (const auto& n : data.manifest.novel) novel.insert(index.at(n));
        const BaseNovelResult bn = base_novel_split_ap(dets, gts, base, novel);
        report.partitions["base_novel"] = {{"base", bn.ap_base},
                                           {"novel", bn.ap_novel},
                                           {"base_AP50", bn.ap50_base},
                                           {"novel_AP50", bn.ap50_novel}};
      }
      break;
    }
    case EvalMode::kPg: {
      const RecallResult rr = recall_at_k(dets, gts, {}, config.flickr);
      for (const auto& [k, v] : rr.recall) {
        report.metrics["R@" + std::to_string(k)] = v;
      }
      report.counts["phrases"] = static_cast<std::int64_t>(rr.n_phrases);
      report.counts["phrases_excluded_no_gt"] =
          static_cast<std::int64_t>(rr.n_excluded);
      report.info["flickr_protocol"] = flickr_name(config.flickr);
      break;
    }
    case EvalMode::kRec: {
      using Key = std::pair<std::int64_t, int>;
      std::map<Key, Expression> exprs;
      std::int64_t next_id = 0;
      for (const auto& item : data.items) {
        for (const auto& p : item.sample.phrases) {
          auto& e = exprs[{item.sample.image_id, p.id}];
          e.id = next_id++;
        }
      }
      for (const auto& g : gts) exprs.at({g.image_id, g.label}).gts.push_back(g.box);
      for (const auto& d : dets) {
        auto it = exprs.find({d.image_id, d.label});
        if (it != exprs.end()) it->second.dets.push_back({d.box, d.score});
      }
      std::vector<Expression> list;
      bool single = true;
      for (auto& [key, e] : exprs) {
        single = single && e.gts.size() == 1;
        list.push_back(std::move(e));
      }
      report.counts["expressions"] = static_cast<std::int64_t>(list.size());
      if (single && !list.empty()) {
        const RecResult rec = rec_accuracy(list);
        report.metrics["accuracy"] = rec.accuracy;
      }
      const double t = threshold.value_or(config.gref_thresholds.empty()
                                              ? 0.5
                                              : config.gref_thresholds.front());
      const GrefResult g = grefcoco_metrics(list, t);
      report.metrics["Pr@F1=1"] = g.precision_f1;
      report.metrics["N-acc"] = g.n_acc;
      report.info["threshold"] = threshold_key(t);
      report.counts["no_target_expressions"] =
          static_cast<std::int64_t>(g.no_target);
      if (sweep) {
        auto& pr = report.partitions["sweep_Pr@F1=1"];
        auto& na = report.partitions["sweep_N-acc"];
        for (const auto& r : threshold_sweep(list, config.gref_thresholds)) {
          pr[threshold_key(r.threshold)] = r.precision_f1;
          na[threshold_key(r.threshold)] = r.n_acc;
        }
      }
      break;
    }
    case EvalMode::kD3Concat:
    case EvalMode::kD3Parallel: {
      std::map<int, std::pair<D3Description, std::string>> descs;
      for (const auto& item : data.items) {
        const auto& s = item.sample;
        for (const auto& p : s.phrases) {
          if (p.tag != "PRES" && p.tag != "ABS") {
            throw AnnotationError("description " + std::to_string(p.id) +
                                  " lacks a PRES/ABS tag");
          }
          const std::string text = s.caption.substr(p.begin, p.end - p.begin);
          D3Description d{p.id, p.tag == "PRES", token_count(text)};
          auto [it, inserted] = descs.emplace(p.id, std::make_pair(d, text));
          if (!inserted && (it->second.first.presence != d.presence ||
                            to_lower(it->second.second) != to_lower(text))) {
            throw AnnotationError("description " + std::to_string(p.id) +
                                  " is inconsistent across images");
          }
        }
      }
      std::vector<D3Description> list;
      for (const auto& [id, d] : descs) list.push_back(d.first);
      report = d3_evaluate(dets, gts, list,
                           mode == EvalMode::kD3Concat ? D3Mode::kConcat
                                                       : D3Mode::kParallel,
                           config.d3_buckets);
      report.info["version"] = version_string();
      report.counts["images"] = static_cast<std::int64_t>(n_images);
      report.counts["gt_boxes"] = static_cast<std::int64_t>(gts.size());
      report.counts["detections"] = static_cast<std::int64_t>(dets.size());
      break;
    }
  }
  return report;
}

EvalReport cmd_eval(const EvalOptions& options, const RunConfig& defaults) {
  if (options.manifest.empty()) throw ConfigError("eval needs a manifest");
  const LoadedDataset data =
      load_dataset(options.manifest, !options.predictions.has_value());
  std::vector<PredictionRecord> preds;
  RunConfig config = defaults;
  if (options.predictions) {
    preds = load_predictions(*options.predictions);
    if (!options.run_dir.empty()) {
      config = load_config(options.run_dir / "config.json");
    }
  } else {
    if (options.run_dir.empty()) {
      throw ConfigError("eval needs --run or --predictions");
    }
    const LoadedModel run = load_run(options.run_dir);
    config = run.config;
    preds = predict(run, data, options.mode);
  }
  EvalReport report = evaluate(preds, data, options.mode, config,
                               options.threshold, options.sweep);
  fs::create_directories(options.out);
  save_predictions(options.out / "predictions.jsonl", preds);
  write_text(options.out / "report.json", report.to_json());
  write_text(options.out / "report.txt", report.to_text());
  return report;
}

ConvertSummary cmd_convert(const fs::path& coco_json, const fs::path& out,
                           const std::string& name) {
  const ConvertResult conv = convert_coco_file(coco_json);
  fs::create_directories(out);
  save_unified(out / "annotations.jsonl", conv.samples);
  DatasetManifest m;
  m.name = name;
  m.task = Task::kOvd;
  m.path = "annotations.jsonl";
  m.categories = conv.categories;
  save_manifest(out / "manifest.json", m);
  ConvertSummary s;
  s.images = conv.samples.size();
  for (const auto& sample : conv.samples) s.instances += sample.instances.size();
  s.dropped_crowd = conv.dropped_crowd;
  s.dropped_degenerate = conv.dropped_degenerate;
  s.clamped = conv.clamped;
  return s;
}

void cmd_synth(const SynthSpec& spec, const fs::path& out) {
  const SynthDataset data = synth_generate(spec);
  write_synth(out, data);
  DatasetManifest m;
  m.name = "synth";
  m.task = Task::kOvd;
  m.path = "annotations.jsonl";
  m.categories = synth_category_names(spec.n_categories);
  save_manifest(out / "manifest.json", m);
}

std::string cmd_inspect(const fs::path& target) {
  const fs::path stem = fs::is_directory(target) ? target / "model" : target;
  const CheckpointManifest manifest = read_manifest(stem);
  std::ostringstream ss;
  for (const auto& e : manifest.entries) {
    std::size_t n = 1;
    for (std::size_t d : e.shape) n *= d;
    ss << e.name << '\t' << shape_string(e.shape) << '\t' << n << '\n';
  }
  ss << "tensors\t" << manifest.entries.size() << '\n';
  ss << "parameters\t" << manifest.parameter_count() << '\n';
  return ss.str();
}

}  // namespace mmgd::tools
