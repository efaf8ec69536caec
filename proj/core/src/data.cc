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
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include "json.hpp"
#include "mmgd/error.h"

namespace mmgd {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

BoxXYXY box_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw DataError("box must be an array of 4 numbers");
  }
  for (const auto& v : j) {
    if (!v.is_number()) throw DataError("box must be an array of 4 numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
          j[3].get<double>()};
}

GroundingSample sample_from_json(const json& j) {
  if (!j.is_object()) throw DataError("record is not an object");
  if (!j.contains("schema_version")) throw DataError("missing schema_version");
  const int version = j.at("schema_version").get<int>();
  if (version != kUnifiedSchemaVersion) {
    throw DataError("unsupported schema_version " + std::to_string(version));
  }
  GroundingSample s;
  s.image_id = j.at("image_id").get<std::int64_t>();
  s.file_name = j.value("file_name", "");
  s.width = j.at("width").get<int>();
  s.height = j.at("height").get<int>();
  s.task = parse_task(j.at("task").get<std::string>());
  s.caption = j.value("caption", "");
  s.split = j.value("split", "");
  if (j.contains("categories")) {
    s.categories = j.at("categories").get<std::vector<std::string>>();
  }
  if (j.contains("phrases")) {
    for (const auto& p : j.at("phrases")) {
      PhraseSpan span;
      span.id = p.at("id").get<int>();
      span.begin = p.at("begin").get<std::size_t>();
      span.end = p.at("end").get<std::size_t>();
      span.tag = p.value("tag", "");
      s.phrases.push_back(std::move(span));
    }
  }
  if (j.contains("instances")) {
    for (const auto& i : j.at("instances")) {
      Instance inst;
      inst.box = box_from_json(i.at("box"));
      inst.category_id = i.value("category_id", -1);
      inst.phrase_id = i.value("phrase_id", -1);
      s.instances.push_back(inst);
    }
  }
  return s;
}

std::string format_box(const BoxXYXY& b) {
  std::ostringstream ss;
  ss.precision(17);
  ss << "[" << b.x1 << ", " << b.y1 << ", " << b.x2 << ", " << b.y2 << "]";
  return ss.str();
}

}  // namespace

std::string_view task_name(Task task) {
  switch (task) {
    case Task::kOvd: return "OVD";
    case Task::kPg: return "PG";
    case Task::kRec: return "REC";
  }
  return "OVD";
}

Task parse_task(std::string_view name) {
  std::string up(name);
  for (char& c : up) c = static_cast<char>(std::toupper(c));
  if (up == "OVD") return Task::kOvd;
  if (up == "PG") return Task::kPg;
  if (up == "REC") return Task::kRec;
  throw DataError("unknown task '" + std::string(name) + "'");
}

void validate_sample(GroundingSample& s, std::vector<std::string>* warnings) {
  if (s.width <= 0 || s.height <= 0) {
    throw AnnotationError("image " + std::to_string(s.image_id) +
                          " has non-positive size");
  }
  std::set<int> phrase_ids;
  for (const auto& p : s.phrases) {
    if (p.begin >= p.end || p.end > s.caption.size()) {
      throw AnnotationError("phrase " + std::to_string(p.id) +
                            " span lies outside the caption");
    }
    if (!phrase_ids.insert(p.id).second) {
      throw AnnotationError("duplicate phrase id " + std::to_string(p.id));
    }
  }
  if (s.task == Task::kOvd && s.categories.empty() && !s.instances.empty()) {
    throw AnnotationError("OVD sample without categories");
  }
  if (s.task != Task::kOvd && s.caption.empty()) {
    throw AnnotationError(std::string(task_name(s.task)) +
                          " sample without caption");
  }
  for (auto& inst : s.instances) {
    if (s.task == Task::kOvd) {
      if (inst.category_id < 0 ||
          inst.category_id >= static_cast<int>(s.categories.size())) {
        throw AnnotationError("instance category_id " +
                              std::to_string(inst.category_id) +
                              " out of range");
      }
    } else if (!phrase_ids.count(inst.phrase_id)) {
      throw AnnotationError("instance references missing phrase " +
                            std::to_string(inst.phrase_id));
    }
    BoxXYXY& b = inst.box;
    if (!(std::isfinite(b.x1) && std::isfinite(b.y1) && std::isfinite(b.x2) &&
          std::isfinite(b.y2))) {
      throw AnnotationError("non-finite box");
    }
    if (!(b.x2 > b.x1 && b.y2 > b.y1)) {
      throw AnnotationError("degenerate box " + format_box(b));
    }
    const BoxXYXY orig = b;
    b.x1 = std::clamp(b.x1, 0.0, static_cast<double>(s.width));
    b.x2 = std::clamp(b.x2, 0.0, static_cast<double>(s.width));
    b.y1 = std::clamp(b.y1, 0.0, static_cast<double>(s.height));
    b.y2 = std::clamp(b.y2, 0.0, static_cast<double>(s.height));
    if (!(b == orig)) {
      if (!(b.x2 > b.x1 && b.y2 > b.y1)) {
        throw AnnotationError("box " + format_box(orig) +
                              " lies outside the image");
      }
      if (warnings) {
        warnings->push_back("image " + std::to_string(s.image_id) +
                            ": clamped box " + format_box(orig) + " to " +
                            format_box(b));
      }
    }
  }
}

LoadResult parse_unified(std::istream& in) {
  LoadResult result;
  std::string line;
  long line_no = 0;
  long offset = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const long line_start = offset;
    offset += static_cast<long>(line.size()) + 1;
    if (std::all_of(line.begin(), line.end(),
                    [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      const long at = line_start + static_cast<long>(e.byte) -
                      (e.byte > 0 ? 1 : 0);
      throw ParseError("malformed record", line_no, at);
    }
    try {
      GroundingSample s = sample_from_json(j);
      validate_sample(s, &result.warnings);
      result.samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw ParseError(std::string("schema violation: ") + e.what(), line_no,
                       line_start);
    } catch (const DataError& e) {
      throw ParseError(e.what(), line_no, line_start);
    }
  }
  return result;
}

LoadResult load_unified(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_unified(in);
}

std::string unified_record(const GroundingSample& s) {
  ordered_json j;
  j["schema_version"] = kUnifiedSchemaVersion;
  j["image_id"] = s.image_id;
  j["file_name"] = s.file_name;
  j["width"] = s.width;
  j["height"] = s.height;
  j["task"] = std::string(task_name(s.task));
  j["caption"] = s.caption;
  j["categories"] = s.categories;
  ordered_json phrases = ordered_json::array();
  for (const auto& p : s.phrases) {
    ordered_json pj;
    pj["id"] = p.id;
    pj["begin"] = p.begin;
    pj["end"] = p.end;
    if (!p.tag.empty()) pj["tag"] = p.tag;
    phrases.push_back(std::move(pj));
  }
  j["phrases"] = std::move(phrases);
  ordered_json instances = ordered_json::array();
  for (const auto& i : s.instances) {
    ordered_json ij;
    ij["box"] = {i.box.x1, i.box.y1, i.box.x2, i.box.y2};
    if (i.category_id >= 0) ij["category_id"] = i.category_id;
    if (i.phrase_id >= 0) ij["phrase_id"] = i.phrase_id;
    instances.push_back(std::move(ij));
  }
  j["instances"] = std::move(instances);
  j["split"] = s.split;
  return j.dump();
}

void write_unified(std::ostream& out,
                   const std::vector<GroundingSample>& samples) {
  for (const auto& s : samples) out << unified_record(s) << '\n';
}

void save_unified(const std::filesystem::path& path,
                  const std::vector<GroundingSample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_unified(out, samples);
  if (!out) throw DataError("write failed: " + path.string());
}

ConvertResult convert_coco_style(const std::string& json_text,
                                 const std::string& split) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed COCO json", 1, static_cast<long>(e.byte));
  }
  ConvertResult out;
  try {
    std::vector<std::pair<std::int64_t, std::string>> cats;
    for (const auto& c : j.at("categories")) {
      cats.emplace_back(c.at("id").get<std::int64_t>(),
                        c.at("name").get<std::string>());
    }
    std::sort(cats.begin(), cats.end());
    for (std::size_t i = 0; i < cats.size(); ++i) {
      if (i > 0 && cats[i].first == cats[i - 1].first) {
        throw DataError("duplicate category id " +
                        std::to_string(cats[i].first));
      }
      out.category_index[cats[i].first] = static_cast<int>(i);
      out.categories.push_back(cats[i].second);
    }

    std::map<std::int64_t, std::size_t> image_index;
    for (const auto& im : j.at("images")) {
      GroundingSample s;
      s.image_id = im.at("id").get<std::int64_t>();
      s.file_name = im.value("file_name", "");
      s.width = im.at("width").get<int>();
      s.height = im.at("height").get<int>();
      s.task = Task::kOvd;
      s.categories = out.categories;
      s.split = split;
      if (!image_index.emplace(s.image_id, out.samples.size()).second) {
        throw DataError("duplicate image id " + std::to_string(s.image_id));
      }
      out.samples.push_back(std::move(s));
    }

    const json empty = json::array();
    const json& anns = j.contains("annotations") ? j.at("annotations") : empty;
    for (const auto& a : anns) {
      const auto image_id = a.at("image_id").get<std::int64_t>();
      auto it = image_index.find(image_id);
      if (it == image_index.end()) {
        throw DataError("annotation references missing image " +
                        std::to_string(image_id));
      }
      const auto cat_id = a.at("category_id").get<std::int64_t>();
      auto ct = out.category_index.find(cat_id);
      if (ct == out.category_index.end()) {
        throw DataError("annotation references missing category " +
                        std::to_string(cat_id));
      }
      if (a.value("iscrowd", 0) != 0) {
        ++out.dropped_crowd;
        continue;
      }
      const auto& bb = a.at("bbox");
      if (!bb.is_array() || bb.size() != 4) {
        throw DataError("bbox must have 4 numbers");
      }
      GroundingSample& s = out.samples[it->second];
      const double x = bb[0].get<double>(), y = bb[1].get<double>();
      const double w = bb[2].get<double>(), h = bb[3].get<double>();
      BoxXYXY box{x, y, x + w, y + h};
      const BoxXYXY orig = box;
      box.x1 = std::clamp(box.x1, 0.0, static_cast<double>(s.width));
      box.x2 = std::clamp(box.x2, 0.0, static_cast<double>(s.width));
      box.y1 = std::clamp(box.y1, 0.0, static_cast<double>(s.height));
      box.y2 = std::clamp(box.y2, 0.0, static_cast<double>(s.height));
      if (!(box.x2 > box.x1 && box.y2 > box.y1)) {
        ++out.dropped_degenerate;
        continue;
      }
      if (!(box == orig)) ++out.clamped;
      Instance inst;
      inst.box = box;
      inst.category_id = ct->second;
      s.instances.push_back(inst);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("COCO schema violation: ") + e.what());
  }
  return out;
}

ConvertResult convert_coco_file(const std::filesystem::path& path,
                                const std::string& split) {
  return convert_coco_style(read_file(path), split);
}

void DatasetManifest::validate() const {
  if (name.empty()) throw ConfigError("manifest without name");
  if (path.empty()) throw ConfigError("manifest '" + name + "' without path");
  if (!std::filesystem::exists(path)) {
    throw DataError("manifest '" + name + "' references missing file " +
                    path.string());
  }
  const std::set<std::string> names(categories.begin(), categories.end());
  if (names.size() != categories.size()) {
    throw ConfigError("manifest '" + name + "' repeats a category");
  }
  for (const auto& [cat, bucket] : frequency) {
    if (!names.count(cat)) {
      throw ConfigError("frequency bucket for unknown category '" + cat + "'");
    }
    if (bucket != "r" && bucket != "c" && bucket != "f") {
      throw ConfigError("frequency bucket must be r, c or f, got '" + bucket +
                        "'");
    }
  }
  std::set<std::string> base_set;
  for (const auto& c : base) {
    if (!names.count(c)) {
      throw ConfigError("base category '" + c + "' not in category list");
    }
    base_set.insert(c);
  }
  for (const auto& c : novel) {
    if (!names.count(c)) {
      throw ConfigError("novel category '" + c + "' not in category list");
    }
    if (base_set.count(c)) {
      throw ConfigError("category '" + c + "' is both base and novel");
    }
  }
  if (chunk_size && *chunk_size == 0) {
    throw ConfigError("chunk_size must be positive");
  }
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError("malformed manifest " + path.string(), 1,
                     static_cast<long>(e.byte));
  }
  DatasetManifest m;
  try {
    m.name = j.at("name").get<std::string>();
    m.task = parse_task(j.at("task").get<std::string>());
    m.path = j.at("path").get<std::string>();
    if (m.path.is_relative()) m.path = path.parent_path() / m.path;
    m.categories = j.value("categories", std::vector<std::string>{});
    m.frequency =
        j.value("frequency", std::map<std::string, std::string>{});
    m.base = j.value("base", std::vector<std::string>{});
    m.novel = j.value("novel", std::vector<std::string>{});
    if (j.contains("chunk_size") && !j.at("chunk_size").is_null()) {
      m.chunk_size = j.at("chunk_size").get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest schema violation: ") + e.what());
  }
  m.validate();
  return m;
}

void save_manifest(const std::filesystem::path& path,
                   const DatasetManifest& m) {
  ordered_json j;
  j["name"] = m.name;
  j["task"] = std::string(task_name(m.task));
  j["path"] = m.path.string();
  j["categories"] = m.categories;
  j["frequency"] = m.frequency;
  j["base"] = m.base;
  j["novel"] = m.novel;
  if (m.chunk_size) j["chunk_size"] = *m.chunk_size;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

IndexRange epoch_partition(std::size_t n_items, std::size_t chunk_size,
                           std::size_t epoch_index) {
  if (chunk_size == 0) throw ConfigError("chunk_size must be positive");
  if (n_items == 0) return {};
  const std::size_t chunks = (n_items + chunk_size - 1) / chunk_size;
  const std::size_t begin = (epoch_index % chunks) * chunk_size;
  return {begin, std::min(begin + chunk_size, n_items)};
}

}  // namespace mmgd
