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

#include "mmgd/data.h"

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "mmgd/error.h"
#include "mmgd/image.h"
#include "mmgd/metrics.h"
#include "mmgd/rng.h"

namespace mmgd {
namespace {

using nlohmann::json;

std::string random_word(Rng& rng) {
  static const char kAlphabet[] = "abcdefghijklmnopqrstuvwxyz\"\\/'";
  std::string w;
  const std::size_t n = 1 + rng.uniform_int(7);
  for (std::size_t i = 0; i < n; ++i) {
    w += kAlphabet[rng.uniform_int(sizeof(kAlphabet) - 1)];
  }
  return w;
}

GroundingSample random_sample(Rng& rng, std::int64_t id) {
  GroundingSample s;
  s.image_id = id;
  s.file_name = "img_" + std::to_string(id) + ".ppm";
  s.width = 16 + static_cast<int>(rng.uniform_int(200));
  s.height = 16 + static_cast<int>(rng.uniform_int(200));
  s.task = static_cast<Task>(rng.uniform_int(3));
  s.split = rng.uniform() < 0.5 ? "train" : "val";
  const std::size_t n_inst = rng.uniform_int(5);
  if (s.task == Task::kOvd) {
    const std::size_t n_cat = 1 + rng.uniform_int(4);
    for (std::size_t c = 0; c < n_cat; ++c) s.categories.push_back(random_word(rng));
  } else {
    const std::size_t n_phr = 1 + rng.uniform_int(3);
    for (std::size_t p = 0; p < n_phr; ++p) {
      if (!s.caption.empty()) s.caption += " and ";
      const std::string w = random_word(rng);
      PhraseSpan span{static_cast<int>(10 * p + 1), s.caption.size(),
                      s.caption.size() + w.size(),
                      rng.uniform() < 0.3 ? "PRES" : ""};
      s.caption += w;
      s.phrases.push_back(span);
    }
    s.caption += " .\n\ttail";
  }
  for (std::size_t i = 0; i < n_inst; ++i) {
    Instance inst;
    const double x1 = rng.uniform(0, s.width - 2.0);
    const double y1 = rng.uniform(0, s.height - 2.0);
    inst.box = {x1, y1, rng.uniform(x1 + 0.5, s.width),
                rng.uniform(y1 + 0.5, s.height)};
    if (s.task == Task::kOvd) {
      inst.category_id = static_cast<int>(rng.uniform_int(s.categories.size()));
    } else {
      inst.phrase_id = s.phrases[rng.uniform_int(s.phrases.size())].id;
    }
    s.instances.push_back(inst);
  }
  return s;
}

LoadResult parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_unified(in);
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() /
                 ("mmgd_data_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

TEST(TaskTest, Names) {
  EXPECT_EQ(task_name(Task::kPg), "PG");
  EXPECT_EQ(parse_task("rec"), Task::kRec);
  EXPECT_EQ(parse_task("OVD"), Task::kOvd);
  EXPECT_THROW(parse_task("seg"), DataError);
}

TEST(UnifiedTest, EmptyInput) {
  EXPECT_TRUE(parse_text("").samples.empty());
  EXPECT_TRUE(parse_text("\n  \n").samples.empty());
}

TEST(UnifiedTest, RoundTripRandomSamples) {
  Rng rng(1);
  std::vector<GroundingSample> samples;
  for (int i = 0; i < 1000; ++i) samples.push_back(random_sample(rng, i));
  std::ostringstream out;
  write_unified(out, samples);
  const LoadResult back = parse_text(out.str());
  EXPECT_TRUE(back.warnings.empty());
  ASSERT_EQ(back.samples.size(), samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    ASSERT_EQ(back.samples[i], samples[i]) << "sample " << i;
  }
  const auto dir = temp_dir("roundtrip");
  save_unified(dir / "a.jsonl", samples);
  EXPECT_EQ(load_unified(dir / "a.jsonl").samples, samples);
}

TEST(UnifiedTest, DegenerateBoxRejectedWithLineNumber) {
  Rng rng(2);
  GroundingSample good = random_sample(rng, 1);
  GroundingSample bad = good;
  bad.task = Task::kOvd;
  bad.caption.clear();
  bad.phrases.clear();
  bad.categories = {"cat"};
  bad.instances = {{{10, 5, 10, 8}, 0, -1}};
  const std::string text =
      unified_record(good) + "\n" + unified_record(good) + "\n" +
      unified_record(bad) + "\n";
  try {
    parse_text(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.byte_offset(),
              static_cast<long>(2 * (unified_record(good).size() + 1)));
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(UnifiedTest, MalformedJsonReportsByteOffset) {
  const std::string first = "\n";
  try {
    parse_text(first + "{\"image_id\": 1,, }\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    // The second comma sits at column 15 of line 2.
    EXPECT_EQ(e.byte_offset(), 1 + 15);
  }
}

TEST(UnifiedTest, SchemaViolations) {
  Rng rng(3);
  const json base = json::parse(unified_record(random_sample(rng, 7)));
  json wrong_version = base;
  wrong_version["schema_version"] = 99;
  EXPECT_THROW(parse_text(wrong_version.dump() + "\n"), ParseError);
  json missing = base;
  missing.erase("width");
  EXPECT_THROW(parse_text(missing.dump() + "\n"), ParseError);
  json bad_task = base;
  bad_task["task"] = "SEG";
  EXPECT_THROW(parse_text(bad_task.dump() + "\n"), ParseError);
}

TEST(UnifiedTest, OutOfBoundsBoxIsClampedWithWarning) {
  GroundingSample s;
  s.image_id = 4;
  s.width = 20;
  s.height = 10;
  s.categories = {"a"};
  s.instances = {{{-3, 2, 25, 8}, 0, -1}};
  const LoadResult r = parse_text(unified_record(s) + "\n");
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_EQ(r.samples[0].instances[0].box, (BoxXYXY{0, 2, 20, 8}));
}

TEST(ValidateTest, Errors) {
  GroundingSample s;
  s.width = 10;
  s.height = 10;
  s.task = Task::kPg;
  s.caption = "a dog";
  s.phrases = {{1, 2, 5, ""}};
  s.instances = {{{1, 1, 4, 4}, -1, 2}};
  EXPECT_THROW(validate_sample(s, nullptr), AnnotationError);
  s.instances[0].phrase_id = 1;
  EXPECT_NO_THROW(validate_sample(s, nullptr));
  s.phrases[0].end = 9;
  EXPECT_THROW(validate_sample(s, nullptr), AnnotationError);
  s.phrases[0].end = 5;
  s.instances[0].box = {20, 20, 30, 30};
  EXPECT_THROW(validate_sample(s, nullptr), AnnotationError);
  s.instances[0].box = {1, 1, 4, std::nan("")};
  EXPECT_THROW(validate_sample(s, nullptr), AnnotationError);
}

std::string coco_json() {
  json j;
  j["images"] = {{{"id", 5}, {"file_name", "a.jpg"}, {"width", 100}, {"height", 80}},
                 {{"id", 9}, {"file_name", "b.jpg"}, {"width", 50}, {"height", 50}}};
  j["categories"] = {{{"id", 18}, {"name", "dog"}}, {{"id", 3}, {"name", "car"}}};
  j["annotations"] = {
      {{"id", 1}, {"image_id", 5}, {"category_id", 18}, {"bbox", {10, 20, 30, 40}}},
      {{"id", 2}, {"image_id", 5}, {"category_id", 3}, {"bbox", {0, 0, 5, 5}},
       {"iscrowd", 1}}};
  return j.dump();
}

TEST(ConvertTest, CocoStyle) {
  const ConvertResult r = convert_coco_style(coco_json(), "val");
  EXPECT_EQ(r.categories, (std::vector<std::string>{"car", "dog"}));
  EXPECT_EQ(r.category_index.at(3), 0);
  EXPECT_EQ(r.category_index.at(18), 1);
  EXPECT_EQ(r.dropped_crowd, 1u);
  ASSERT_EQ(r.samples.size(), 2u);
  const GroundingSample& a = r.samples[0];
  EXPECT_EQ(a.image_id, 5);
  EXPECT_EQ(a.split, "val");
  ASSERT_EQ(a.instances.size(), 1u);
  EXPECT_EQ(a.instances[0].box, (BoxXYXY{10, 20, 40, 60}));
  EXPECT_EQ(a.instances[0].category_id, 1);
  EXPECT_TRUE(r.samples[1].instances.empty());
  // Converter output passes the loader's validation.
  std::ostringstream out;
  write_unified(out, r.samples);
  EXPECT_EQ(parse_text(out.str()).samples, r.samples);
}

TEST(ConvertTest, DanglingImageId) {
  json j = json::parse(coco_json());
  j["annotations"][0]["image_id"] = 77;
  EXPECT_THROW(convert_coco_style(j.dump()), DataError);
  EXPECT_THROW(convert_coco_style("{not json"), DataError);
}

TEST(ConvertTest, MetricsMatchSourceTruth) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    json j;
    j["images"] = json::array();
    j["annotations"] = json::array();
    j["categories"] = {{{"id", 40}, {"name", "x"}},
                       {{"id", 7}, {"name", "y"}},
                       {{"id", 12}, {"name", "z"}}};
    const int ids[] = {40, 7, 12};
    std::vector<GroundTruthBox> source;
    std::vector<Detection> dets_source;
    int ann = 0;
    for (int img = 0; img < 5; ++img) {
      j["images"].push_back({{"id", img}, {"file_name", "f"}, {"width", 64},
                             {"height", 64}});
      const int n = static_cast<int>(rng.uniform_int(4));
      for (int k = 0; k < n; ++k) {
        const double x = rng.uniform(0, 40), y = rng.uniform(0, 40);
        const double w = rng.uniform(2, 20), h = rng.uniform(2, 20);
        const int cat = ids[rng.uniform_int(3)];
        j["annotations"].push_back({{"id", ++ann}, {"image_id", img},
                                    {"category_id", cat}, {"bbox", {x, y, w, h}}});
        source.push_back({img, {x, y, x + w, y + h}, cat});
        const double jit = rng.uniform(-2, 2);
        dets_source.push_back(
            {img, {x + jit, y, x + w + jit, y + h}, rng.uniform(), cat});
      }
    }
    const ConvertResult r = convert_coco_style(j.dump());
    std::vector<GroundTruthBox> converted;
    for (const auto& s : r.samples) {
      for (const auto& inst : s.instances) {
        converted.push_back({s.image_id, inst.box, inst.category_id});
      }
    }
    std::vector<Detection> dets_converted = dets_source;
    for (auto& d : dets_converted) d.label = r.category_index.at(d.label);
    EXPECT_DOUBLE_EQ(average_precision(dets_converted, converted).mean_ap(),
                     average_precision(dets_source, source).mean_ap());
  }
}

TEST(EpochPartitionTest, Examples) {
  const std::size_t n = 1200000, c = 500000;
  EXPECT_EQ(epoch_partition(n, c, 0), (IndexRange{0, 500000}));
  EXPECT_EQ(epoch_partition(n, c, 1), (IndexRange{500000, 1000000}));
  EXPECT_EQ(epoch_partition(n, c, 2), (IndexRange{1000000, 1200000}));
  EXPECT_EQ(epoch_partition(n, c, 3), (IndexRange{0, 500000}));
  EXPECT_EQ(epoch_partition(10, 10, 4), (IndexRange{0, 10}));
  EXPECT_EQ(epoch_partition(10, 25, 1), (IndexRange{0, 10}));
  EXPECT_THROW(epoch_partition(10, 0, 0), ConfigError);
}

TEST(EpochPartitionTest, ConsecutiveEpochsTile) {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.uniform_int(200);
    const std::size_t c = 1 + rng.uniform_int(250);
    const std::size_t cycle = (n + c - 1) / c;
    const std::size_t start = rng.uniform_int(50);
    std::vector<int> seen(n, 0);
    for (std::size_t e = start; e < start + cycle; ++e) {
      const IndexRange r = epoch_partition(n, c, e);
      ASSERT_LE(r.end, n);
      ASSERT_EQ(r.size(), std::min(c, n - r.begin));
      for (std::size_t i = r.begin; i < r.end; ++i) ++seen[i];
    }
    for (int s : seen) ASSERT_EQ(s, 1);
  }
}

TEST(ManifestTest, RoundTripAndValidation) {
  const auto dir = temp_dir("manifest");
  DatasetManifest m;
  m.name = "toy";
  m.task = Task::kOvd;
  m.path = "annotations.jsonl";
  m.categories = {"red", "green"};
  m.frequency = {{"red", "r"}, {"green", "f"}};
  m.base = {"red"};
  m.novel = {"green"};
  m.chunk_size = 3;
  save_unified(dir / "annotations.jsonl", {});
  save_manifest(dir / "manifest.json", m);
  const DatasetManifest back = load_manifest(dir / "manifest.json");
  EXPECT_EQ(back.name, "toy");
  EXPECT_EQ(back.path, dir / "annotations.jsonl");
  EXPECT_EQ(back.frequency, m.frequency);
  EXPECT_EQ(back.chunk_size, std::optional<std::size_t>(3));
  DatasetManifest bad = back;
  bad.novel = {"red"};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = back;
  bad.frequency["blue"] = "r";
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = back;
  bad.frequency["red"] = "x";
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(load_manifest(dir / "missing.json"), DataError);
  std::filesystem::remove(dir / "annotations.jsonl");
  EXPECT_THROW(load_manifest(dir / "manifest.json"), DataError);
}

TEST(SynthTest, DeterministicAndExact) {
  SynthSpec spec;
  spec.n_images = 6;
  spec.n_categories = 3;
  spec.boxes_per_image = 3;
  spec.image_size = 40;
  spec.seed = 11;
  const SynthDataset a = synth_generate(spec);
  const SynthDataset b = synth_generate(spec);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.images, b.images);
  spec.seed = 12;
  EXPECT_NE(synth_generate(spec).samples, a.samples);
  const auto bg = synth_background();
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const GroundingSample& s = a.samples[i];
    const Image& img = a.images[i];
    EXPECT_EQ(s.categories, synth_category_names(3));
    ASSERT_EQ(s.instances.size(), 3u);
    // Every pixel is background unless inside exactly one rectangle, which
    // then carries its category colour.
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        int owner = -1;
        for (const auto& inst : s.instances) {
          if (x >= inst.box.x1 && x < inst.box.x2 && y >= inst.box.y1 &&
              y < inst.box.y2) {
            ASSERT_EQ(owner, -1);
            owner = inst.category_id;
          }
        }
        const auto want = owner < 0 ? bg : synth_color(owner);
        for (int c = 0; c < 3; ++c) ASSERT_EQ(img.at(c, y, x), want[c]);
      }
    }
  }
}

TEST(SynthTest, ColoursDistinctAndGenerationError) {
  std::set<std::vector<double>> colours;
  for (int c = 0; c < 40; ++c) colours.insert(synth_color(c));
  colours.insert(synth_background());
  EXPECT_EQ(colours.size(), 41u);
  SynthSpec crowded;
  crowded.boxes_per_image = 200;
  crowded.image_size = 16;
  EXPECT_THROW(synth_generate(crowded), GenerationError);
}

TEST(SynthTest, GroundTruthAsPredictionsScoresOne) {
  SynthSpec spec;
  spec.n_images = 8;
  spec.n_categories = 4;
  spec.boxes_per_image = 3;
  const SynthDataset d = synth_generate(spec);
  std::vector<GroundTruthBox> gts;
  std::vector<Detection> dets;
  for (const auto& s : d.samples) {
    for (const auto& inst : s.instances) {
      gts.push_back({s.image_id, inst.box, inst.category_id});
      dets.push_back({s.image_id, inst.box, 1.0, inst.category_id});
    }
  }
  EXPECT_EQ(average_precision(dets, gts).mean_ap(), 1.0);
}

TEST(SynthTest, WriteAndReload) {
  SynthSpec spec;
  spec.n_images = 2;
  const SynthDataset d = synth_generate(spec);
  const auto dir = temp_dir("synth");
  write_synth(dir, d);
  EXPECT_EQ(load_unified(dir / "annotations.jsonl").samples, d.samples);
  EXPECT_EQ(read_ppm(dir / d.samples[1].file_name), d.images[1]);
}

}  // namespace
}  // namespace mmgd
