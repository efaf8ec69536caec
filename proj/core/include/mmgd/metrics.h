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

#ifndef MMGD_METRICS_H_
#define MMGD_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mmgd/box.h"
#include "mmgd/report.h"

namespace mmgd {

// A scored box. `label` is a category id, phrase id or description id
// depending on the protocol.
struct Detection {
  std::int64_t image_id = 0;
  BoxXYXY box;
  double score = 0.0;
  int label = 0;
};

struct GroundTruthBox {
  std::int64_t image_id = 0;
  BoxXYXY box;
  int label = 0;
};

inline constexpr std::size_t kRecallPoints = 101;

// 0.50, 0.55, ..., 0.95.
std::vector<double> coco_iou_thresholds();
// r * 0.01 for r = 0..100.
std::vector<double> recall_thresholds();

struct ApOptions {
  std::vector<double> iou_thresholds = coco_iou_thresholds();
  // Per image and label.
  std::size_t max_dets = 100;
};

// COCO-style 101-point interpolated AP for every label with ground truth.
struct ApResult {
  std::vector<double> thresholds;
  // Labels with at least one ground-truth box, ascending.
  std::vector<int> labels;
  // ap[t][k]: threshold t, label labels[k].
  std::vector<std::vector<double>> ap;
  // Labels that only appear in detections.
  std::vector<int> skipped_labels;

  // Mean over labels, then thresholds. -1 when no label has ground truth.
  double mean_ap() const;
  // Mean over labels at one threshold index.
  double mean_ap_at(std::size_t threshold_index) const;
  // AP of one label averaged over thresholds; -1 when not evaluated.
  double label_ap(int label) const;
  // Mean of label_ap over a subset, -1 when the subset has no evaluated label.
  double subset_ap(const std::set<int>& subset) const;
  double subset_ap_at(const std::set<int>& subset,
                      std::size_t threshold_index) const;
  std::size_t threshold_index(double threshold) const;
};

ApResult average_precision(std::span<const Detection> dets,
                           std::span<const GroundTruthBox> gts,
                           const ApOptions& options = {});

enum class FrequencyBucket { kRare, kCommon, kFrequent };

struct LvisResult {
  double ap = -1;
  double ap_rare = -1;
  double ap_common = -1;
  double ap_frequent = -1;
  ApResult detail;
};

// AP per category, averaged within rare/common/frequent buckets and overall.
// Throws AnnotationError for a category without a bucket.
LvisResult lvis_style_ap(std::span<const Detection> dets,
                         std::span<const GroundTruthBox> gts,
                         const std::map<int, FrequencyBucket>& buckets,
                         const ApOptions& options = {});

enum class FlickrProtocol { kAnyBox, kMergedBox };

struct RecallResult {
  std::map<std::size_t, double> recall;  // k -> R@k
  std::size_t n_phrases = 0;
  // Phrases that had detections but no ground-truth box.
  std::size_t n_excluded = 0;
};

// Detections and ground truth keyed by (image_id, phrase id = label). A phrase
// is a hit at k when one of its k best-scored boxes reaches IoU >= 0.5 with
// any of its boxes (kAnyBox) or with their enclosing box (kMergedBox).
RecallResult recall_at_k(std::span<const Detection> dets,
                         std::span<const GroundTruthBox> gts,
                         std::span<const std::size_t> ks = {},
                         FlickrProtocol protocol = FlickrProtocol::kAnyBox);

struct ScoredBox {
  BoxXYXY box;
  double score = 0.0;
};

// One referring expression: candidate boxes and its 0..n target boxes.
struct Expression {
  std::int64_t id = 0;
  std::vector<ScoredBox> dets;
  std::vector<BoxXYXY> gts;
};

struct RecResult {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
};

// Top-1 box (first on equal scores) correct when IoU >= 0.5. Every expression
// must have exactly one target box (AnnotationError otherwise).
RecResult rec_accuracy(std::span<const Expression> expressions);

struct GrefResult {
  double threshold = 0.0;
  // Pr@(F1=1, IoU>=0.5) over expressions with targets.
  double precision_f1 = 0.0;
  // Fraction of no-target expressions with no kept detection.
  double n_acc = 0.0;
  std::size_t targeted = 0;
  std::size_t targeted_hits = 0;
  std::size_t no_target = 0;
  std::size_t no_target_hits = 0;
};

// Keeps detections with score >= threshold and matches them greedily in
// descending score order, one-to-one at IoU >= 0.5.
GrefResult grefcoco_metrics(std::span<const Expression> expressions,
                            double threshold);

std::vector<double> default_sweep_thresholds();

// grefcoco_metrics at each threshold; thresholds must be ascending.
std::vector<GrefResult> threshold_sweep(std::span<const Expression> expressions,
                                        std::span<const double> thresholds);

enum class D3Mode { kConcat, kParallel };

struct D3Description {
  int id = 0;
  bool presence = true;
  std::size_t length = 0;
};

// Token-length buckets: s <= short_max < m <= middle_max < l <= long_max < vl.
struct LengthBuckets {
  std::size_t short_max = 3;
  std::size_t middle_max = 6;
  std::size_t long_max = 10;

  std::string bucket(std::size_t length) const;
};

// AP (labels = description ids) over FULL, PRES and ABS partitions and per
// length bucket. Throws AnnotationError for a description id without tags.
EvalReport d3_evaluate(std::span<const Detection> dets,
                       std::span<const GroundTruthBox> gts,
                       std::span<const D3Description> descriptions,
                       D3Mode mode, const LengthBuckets& buckets = {},
                       const ApOptions& options = {});

// Unweighted mean; throws ConfigError on an empty list.
double macro_average(std::span<const double> values);

struct BaseNovelResult {
  double ap = -1;
  double ap_base = -1;
  double ap_novel = -1;
  double ap50 = -1;
  double ap50_base = -1;
  double ap50_novel = -1;
};

// Category-mean AP restricted to each partition. The partitions must be
// disjoint and cover every category present (ConfigError otherwise).
BaseNovelResult base_novel_split_ap(std::span<const Detection> dets,
                                    std::span<const GroundTruthBox> gts,
                                    const std::set<int>& base,
                                    const std::set<int>& novel,
                                    const ApOptions& options = {});

}  // namespace mmgd

#endif  // MMGD_METRICS_H_
