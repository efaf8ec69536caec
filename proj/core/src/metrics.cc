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

#include "mmgd/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>

#include "mmgd/error.h"

namespace mmgd {
namespace {

constexpr double kHitIou = 0.5;

// Detections of one (image, label) cell ordered by score, capped.
struct Cell {
  std::vector<const Detection*> dets;
  std::vector<const GroundTruthBox*> gts;
};

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return -1;
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

// 101-point interpolated AP for one label at one threshold.
double cell_ap(const std::vector<Cell*>& cells, double threshold,
               std::size_t n_gt) {
  const double t = std::min(threshold, 1.0 - 1e-10);
  std::vector<double> scores;
  std::vector<char> tp;
  for (const Cell* cell : cells) {
    std::vector<char> gt_used(cell->gts.size(), 0);
    for (const Detection* d : cell->dets) {
      double best = t;
      long match = -1;
      for (std::size_t g = 0; g < cell->gts.size(); ++g) {
        if (gt_used[g]) continue;
        const double v = iou(d->box, cell->gts[g]->box);
        if (v < best) continue;
        best = v;
        match = static_cast<long>(g);
      }
      if (match >= 0) gt_used[match] = 1;
      scores.push_back(d->score);
      tp.push_back(match >= 0 ? 1 : 0);
    }
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return scores[a] > scores[b];
  });
  const std::size_t nd = order.size();
  std::vector<double> rc(nd), pr(nd);
  double ctp = 0, cfp = 0;
  for (std::size_t i = 0; i < nd; ++i) {
    if (tp[order[i]]) {
      ctp += 1;
    } else {
      cfp += 1;
    }
    rc[i] = ctp / static_cast<double>(n_gt);
    pr[i] = ctp / (ctp + cfp);
  }
  for (std::size_t i = nd; i-- > 1;) pr[i - 1] = std::max(pr[i - 1], pr[i]);
  const std::vector<double> rthr = recall_thresholds();
  double total = 0;
  for (double r : rthr) {
    const auto it = std::lower_bound(rc.begin(), rc.end(), r);
    if (it == rc.end()) continue;
    total += pr[static_cast<std::size_t>(it - rc.begin())];
  }
  return total / static_cast<double>(rthr.size());
}

std::set<int> labels_of(std::span<const Detection> dets,
                        std::span<const GroundTruthBox> gts) {
  std::set<int> out;
  for (const auto& d : dets) out.insert(d.label);
  for (const auto& g : gts) out.insert(g.label);
  return out;
}

bool hit_any(const std::vector<BoxXYXY>& boxes, const BoxXYXY& det) {
  for (const auto& g : boxes) {
    if (iou(det, g) >= kHitIou) return true;
  }
  return false;
}

// Kept detections sorted by score descending, stable on input order.
std::vector<const ScoredBox*> ranked(const std::vector<ScoredBox>& dets,
                                     double threshold) {
  std::vector<const ScoredBox*> out;
  for (const auto& d : dets) {
    if (d.score >= threshold) out.push_back(&d);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ScoredBox* a, const ScoredBox* b) {
                     return a->score > b->score;
                   });
  return out;
}

std::string format_threshold(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", t);
  return buf;
}

}  // namespace

std::vector<double> coco_iou_thresholds() {
  std::vector<double> out;
  for (int i = 0; i < 10; ++i) out.push_back(0.5 + 0.05 * i);
  return out;
}

std::vector<double> recall_thresholds() {
  std::vector<double> out(kRecallPoints);
  for (std::size_t i = 0; i < kRecallPoints; ++i) out[i] = 0.01 * i;
  return out;
}

double ApResult::mean_ap() const {
  if (labels.empty() || thresholds.empty()) return -1;
  std::vector<double> per_t;
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    per_t.push_back(mean_ap_at(t));
  }
  return mean_of(per_t);
}

double ApResult::mean_ap_at(std::size_t threshold_index) const {
  if (threshold_index >= ap.size()) {
    throw ConfigError("threshold index out of range");
  }
  return mean_of(ap[threshold_index]);
}

double ApResult::label_ap(int label) const {
  const auto it = std::lower_bound(labels.begin(), labels.end(), label);
  if (it == labels.end() || *it != label || thresholds.empty()) return -1;
  const std::size_t k = static_cast<std::size_t>(it - labels.begin());
  double total = 0;
  for (const auto& row : ap) total += row[k];
  return total / static_cast<double>(ap.size());
}

double ApResult::subset_ap(const std::set<int>& subset) const {
  std::vector<double> v;
  for (int label : subset) {
    const double a = label_ap(label);
    if (a >= 0) v.push_back(a);
  }
  return mean_of(v);
}

double ApResult::subset_ap_at(const std::set<int>& subset,
                              std::size_t threshold_index) const {
  if (threshold_index >= ap.size()) {
    throw ConfigError("threshold index out of range");
  }
  std::vector<double> v;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (subset.count(labels[k])) v.push_back(ap[threshold_index][k]);
  }
  return mean_of(v);
}

std::size_t ApResult::threshold_index(double threshold) const {
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (std::abs(thresholds[i] - threshold) < 1e-9) return i;
  }
  throw ConfigError("threshold " + std::to_string(threshold) +
                    " not evaluated");
}

ApResult average_precision(std::span<const Detection> dets,
                           std::span<const GroundTruthBox> gts,
                           const ApOptions& options) {
  if (options.iou_thresholds.empty()) {
    throw ConfigError("no IoU thresholds");
  }
  for (const auto& d : dets) {
    if (!std::isfinite(d.score)) throw DataError("non-finite score");
  }
  ApResult result;
  result.thresholds = options.iou_thresholds;

  std::map<int, std::map<std::int64_t, Cell>> by_label;
  for (const auto& g : gts) by_label[g.label][g.image_id].gts.push_back(&g);
  for (const auto& d : dets) {
    auto it = by_label.find(d.label);
    if (it == by_label.end()) {
      if (result.skipped_labels.empty() ||
          std::find(result.skipped_labels.begin(),
                    result.skipped_labels.end(),
                    d.label) == result.skipped_labels.end()) {
        result.skipped_labels.push_back(d.label);
      }
      continue;
    }
    it->second[d.image_id].dets.push_back(&d);
  }
  std::sort(result.skipped_labels.begin(), result.skipped_labels.end());

  result.ap.assign(result.thresholds.size(), {});
  for (auto& [label, images] : by_label) {
    result.labels.push_back(label);
    std::vector<Cell*> cells;
    std::size_t n_gt = 0;
    for (auto& [image_id, cell] : images) {
      std::stable_sort(cell.dets.begin(), cell.dets.end(),
                       [](const Detection* a, const Detection* b) {
                         return a->score > b->score;
                       });
      if (cell.dets.size() > options.max_dets) {
        cell.dets.resize(options.max_dets);
      }
      n_gt += cell.gts.size();
      cells.push_back(&cell);
    }
    for (std::size_t t = 0; t < result.thresholds.size(); ++t) {
      result.ap[t].push_back(cell_ap(cells, result.thresholds[t], n_gt));
    }
  }
  return result;
}

LvisResult lvis_style_ap(std::span<const Detection> dets,
                         std::span<const GroundTruthBox> gts,
                         const std::map<int, FrequencyBucket>& buckets,
                         const ApOptions& options) {
  for (int label : labels_of(dets, gts)) {
    if (!buckets.count(label)) {
      throw AnnotationError("category " + std::to_string(label) +
                            " has no frequency bucket");
    }
  }
  LvisResult out;
  out.detail = average_precision(dets, gts, options);
  std::set<int> r, c, f;
  for (const auto& [label, bucket] : buckets) {
    switch (bucket) {
      case FrequencyBucket::kRare: r.insert(label); break;
      case FrequencyBucket::kCommon: c.insert(label); break;
      case FrequencyBucket::kFrequent: f.insert(label); break;
    }
  }
  std::set<int> all(out.detail.labels.begin(), out.detail.labels.end());
  out.ap = out.detail.subset_ap(all);
  out.ap_rare = out.detail.subset_ap(r);
  out.ap_common = out.detail.subset_ap(c);
  out.ap_frequent = out.detail.subset_ap(f);
  return out;
}

RecallResult recall_at_k(std::span<const Detection> dets,
                         std::span<const GroundTruthBox> gts,
                         std::span<const std::size_t> ks,
                         FlickrProtocol protocol) {
  static const std::size_t kDefaultKs[] = {1, 5, 10};
  if (ks.empty()) ks = kDefaultKs;
  using Key = std::pair<std::int64_t, int>;
  std::map<Key, std::vector<BoxXYXY>> truth;
  for (const auto& g : gts) truth[{g.image_id, g.label}].push_back(g.box);
  std::map<Key, std::vector<const Detection*>> ranked_dets;
  for (const auto& d : dets) ranked_dets[{d.image_id, d.label}].push_back(&d);

  RecallResult out;
  for (const auto& [key, list] : ranked_dets) {
    if (!truth.count(key)) ++out.n_excluded;
  }
  out.n_phrases = truth.size();
  std::map<std::size_t, std::size_t> hits;
  for (std::size_t k : ks) hits[k] = 0;
  for (auto& [key, boxes] : truth) {
    std::vector<BoxXYXY> targets = boxes;
    if (protocol == FlickrProtocol::kMergedBox) {
      BoxXYXY m = boxes.front();
      for (const auto& b : boxes) {
        m.x1 = std::min(m.x1, b.x1);
        m.y1 = std::min(m.y1, b.y1);
        m.x2 = std::max(m.x2, b.x2);
        m.y2 = std::max(m.y2, b.y2);
      }
      targets = {m};
    }
    auto it = ranked_dets.find(key);
    if (it == ranked_dets.end()) continue;
    auto& list = it->second;
    std::stable_sort(list.begin(), list.end(),
                     [](const Detection* a, const Detection* b) {
                       return a->score > b->score;
                     });
    // Rank of the first hit.
    std::size_t first = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (hit_any(targets, list[i]->box)) {
        first = i;
        break;
      }
    }
    for (std::size_t k : ks) {
      if (first < k) ++hits[k];
    }
  }
  for (std::size_t k : ks) {
    out.recall[k] = out.n_phrases == 0
                        ? 0.0
                        : static_cast<double>(hits[k]) /
                              static_cast<double>(out.n_phrases);
  }
  return out;
}

RecResult rec_accuracy(std::span<const Expression> expressions) {
  RecResult out;
  for (const auto& e : expressions) {
    if (e.gts.size() != 1) {
      throw AnnotationError("expression " + std::to_string(e.id) + " has " +
                            std::to_string(e.gts.size()) +
                            " target boxes, expected 1");
    }
    ++out.total;
    const auto list = ranked(e.dets, -std::numeric_limits<double>::infinity());
    if (!list.empty() && iou(list.front()->box, e.gts.front()) >= kHitIou) {
      ++out.correct;
    }
  }
  out.accuracy = out.total == 0 ? 0.0
                                : static_cast<double>(out.correct) /
                                      static_cast<double>(out.total);
  return out;
}

GrefResult grefcoco_metrics(std::span<const Expression> expressions,
                            double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ConfigError("threshold must lie in [0, 1]");
  }
  GrefResult out;
  out.threshold = threshold;
  for (const auto& e : expressions) {
    const auto kept = ranked(e.dets, threshold);
    if (e.gts.empty()) {
      ++out.no_target;
      if (kept.empty()) ++out.no_target_hits;
      continue;
    }
    ++out.targeted;
    std::vector<char> used(e.gts.size(), 0);
    std::size_t matched = 0;
    for (const ScoredBox* d : kept) {
      double best = -1;
      long match = -1;
      for (std::size_t g = 0; g < e.gts.size(); ++g) {
        if (used[g]) continue;
        const double v = iou(d->box, e.gts[g]);
        if (v >= kHitIou && v > best) {
          best = v;
          match = static_cast<long>(g);
        }
      }
      if (match >= 0) {
        used[match] = 1;
        ++matched;
      }
    }
    if (matched == e.gts.size() && matched == kept.size()) {
      ++out.targeted_hits;
    }
  }
  out.precision_f1 = out.targeted == 0
                         ? 0.0
                         : static_cast<double>(out.targeted_hits) /
                               static_cast<double>(out.targeted);
  out.n_acc = out.no_target == 0
                  ? 0.0
                  : static_cast<double>(out.no_target_hits) /
                        static_cast<double>(out.no_target);
  return out;
}

std::vector<double> default_sweep_thresholds() {
  return {0.5, 0.6, 0.7, 0.8};
}

std::vector<GrefResult> threshold_sweep(std::span<const Expression> expressions,
                                        std::span<const double> thresholds) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw ConfigError("sweep thresholds must be ascending");
  }
  std::vector<GrefResult> out;
  for (double t : thresholds) out.push_back(grefcoco_metrics(expressions, t));
  return out;
}

std::string LengthBuckets::bucket(std::size_t length) const {
  if (length <= short_max) return "s";
  if (length <= middle_max) return "m";
  if (length <= long_max) return "l";
  return "vl";
}

EvalReport d3_evaluate(std::span<const Detection> dets,
                       std::span<const GroundTruthBox> gts,
                       std::span<const D3Description> descriptions,
                       D3Mode mode, const LengthBuckets& buckets,
                       const ApOptions& options) {
  if (!(buckets.short_max < buckets.middle_max &&
        buckets.middle_max < buckets.long_max)) {
    throw ConfigError("length bucket bounds must be increasing");
  }
  std::map<int, const D3Description*> tags;
  for (const auto& d : descriptions) tags[d.id] = &d;
  for (int label : labels_of(dets, gts)) {
    if (!tags.count(label)) {
      throw AnnotationError("description " + std::to_string(label) +
                            " has no partition tag");
    }
  }
  const ApResult ap = average_precision(dets, gts, options);
  std::set<int> all, pres, abs;
  std::map<std::string, std::set<int>> by_len;
  for (const auto& [id, d] : tags) {
    all.insert(id);
    (d->presence ? pres : abs).insert(id);
    by_len[buckets.bucket(d->length)].insert(id);
  }
  EvalReport report;
  report.info["mode"] = mode == D3Mode::kConcat ? "concat" : "parallel";
  report.metrics["FULL"] = ap.subset_ap(all);
  report.metrics["PRES"] = ap.subset_ap(pres);
  report.metrics["ABS"] = ap.subset_ap(abs);
  auto& lengths = report.partitions["length"];
  for (const char* name : {"s", "m", "l", "vl"}) {
    auto it = by_len.find(name);
    lengths[name] = it == by_len.end() ? -1 : ap.subset_ap(it->second);
  }
  auto& per_t = report.partitions["iou_threshold"];
  for (std::size_t t = 0; t < ap.thresholds.size(); ++t) {
    per_t[format_threshold(ap.thresholds[t])] = ap.mean_ap_at(t);
  }
  report.counts["descriptions"] = static_cast<std::int64_t>(tags.size());
  report.counts["evaluated"] = static_cast<std::int64_t>(ap.labels.size());
  report.counts["excluded_no_gt"] =
      static_cast<std::int64_t>(ap.skipped_labels.size());
  return report;
}

double macro_average(std::span<const double> values) {
  if (values.empty()) throw ConfigError("macro average of an empty list");
  double total = 0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

BaseNovelResult base_novel_split_ap(std::span<const Detection> dets,
                                    std::span<const GroundTruthBox> gts,
                                    const std::set<int>& base,
                                    const std::set<int>& novel,
                                    const ApOptions& options) {
  for (int label : base) {
    if (novel.count(label)) {
      throw ConfigError("category " + std::to_string(label) +
                        " is both base and novel");
    }
  }
  for (const auto& g : gts) {
    if (!base.count(g.label) && !novel.count(g.label)) {
      throw ConfigError("category " + std::to_string(g.label) +
                        " is neither base nor novel");
    }
  }
  const ApResult ap = average_precision(dets, gts, options);
  std::set<int> all(ap.labels.begin(), ap.labels.end());
  BaseNovelResult out;
  out.ap = ap.subset_ap(all);
  out.ap_base = ap.subset_ap(base);
  out.ap_novel = ap.subset_ap(novel);
  std::size_t t50 = ap.thresholds.size();
  for (std::size_t i = 0; i < ap.thresholds.size(); ++i) {
    if (std::abs(ap.thresholds[i] - 0.5) < 1e-9) t50 = i;
  }
  if (t50 < ap.thresholds.size()) {
    out.ap50 = ap.subset_ap_at(all, t50);
    out.ap50_base = ap.subset_ap_at(base, t50);
    out.ap50_novel = ap.subset_ap_at(novel, t50);
  }
  return out;
}

}  // namespace mmgd
