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

#include "mmgd/predictions_io.h"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "mmgd/error.h"

namespace mmgd {

using ordered_json = nlohmann::ordered_json;

std::string prediction_line(const PredictionRecord& r) {
  ordered_json j;
  j["image_id"] = r.image_id;
  j["box"] = {r.box.x1, r.box.y1, r.box.x2, r.box.y2};
  j["score"] = r.score;
  j["label_id"] = r.label_id;
  if (r.phrase_id >= 0) j["phrase_id"] = r.phrase_id;
  return j.dump();
}

void write_predictions(std::ostream& out,
                       const std::vector<PredictionRecord>& records) {
  for (const auto& r : records) out << prediction_line(r) << '\n';
}

void save_predictions(const std::filesystem::path& path,
                      const std::vector<PredictionRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_predictions(out, records);
}

std::vector<PredictionRecord> parse_predictions(std::istream& in) {
  std::vector<PredictionRecord> out;
  std::string line;
  long line_no = 0, offset = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const long start = offset;
    offset += static_cast<long>(line.size()) + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const ordered_json::parse_error& e) {
      throw ParseError("malformed prediction", line_no,
                       start + static_cast<long>(e.byte) -
                           (e.byte > 0 ? 1 : 0));
    }
    PredictionRecord r;
    try {
      r.image_id = j.at("image_id").get<std::int64_t>();
      const auto& b = j.at("box");
      if (!b.is_array() || b.size() != 4) {
        throw ParseError("box must have 4 numbers", line_no, start);
      }
      r.box = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
               b[3].get<double>()};
      r.score = j.at("score").get<double>();
      r.label_id = j.at("label_id").get<int>();
      if (j.contains("phrase_id") && !j.at("phrase_id").is_null()) {
        r.phrase_id = j.at("phrase_id").get<int>();
      }
    } catch (const ordered_json::exception& e) {
      throw ParseError(std::string("schema violation: ") + e.what(), line_no,
                       start);
    }
    if (!std::isfinite(r.score)) {
      throw ParseError("non-finite score", line_no, start);
    }
    if (!(r.box.x2 > r.box.x1 && r.box.y2 > r.box.y1)) {
      throw ParseError("degenerate box", line_no, start);
    }
    out.push_back(r);
  }
  return out;
}

std::vector<PredictionRecord> load_predictions(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_predictions(in);
}

}  // namespace mmgd
