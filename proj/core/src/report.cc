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

#include "mmgd/report.h"

#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace mmgd {

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["metrics"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : metrics) j["metrics"][k] = v;
  j["partitions"] = nlohmann::ordered_json::object();
  for (const auto& [name, values] : partitions) {
    auto& p = j["partitions"][name];
    p = nlohmann::ordered_json::object();
    for (const auto& [k, v] : values) p[k] = v;
  }
  j["counts"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : counts) j["counts"][k] = v;
  j["info"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : info) j["info"][k] = v;
  return j.dump(2) + "\n";
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%8.4f", v);
    return std::string(buf);
  };
  for (const auto& [k, v] : info) os << k << ": " << v << "\n";
  os << "metric                          value\n";
  for (const auto& [k, v] : metrics) {
    std::snprintf(buf, sizeof(buf), "%-30s", k.c_str());
    os << buf << fmt(v) << "\n";
  }
  for (const auto& [name, values] : partitions) {
    os << "\n[" << name << "]\n";
    for (const auto& [k, v] : values) {
      std::snprintf(buf, sizeof(buf), "  %-28s", k.c_str());
      os << buf << fmt(v) << "\n";
    }
  }
  if (!counts.empty()) {
    os << "\n[counts]\n";
    for (const auto& [k, v] : counts) {
      std::snprintf(buf, sizeof(buf), "  %-28s", k.c_str());
      os << buf << v << "\n";
    }
  }
  return os.str();
}

}  // namespace mmgd
