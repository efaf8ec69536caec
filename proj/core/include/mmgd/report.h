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

#ifndef MMGD_REPORT_H_
#define MMGD_REPORT_H_

#include <cstdint>
#include <map>
#include <string>

namespace mmgd {

// Metric name -> value, with named partitions (per IoU threshold, frequency
// bucket, base/novel, description partition, length bucket). A value of -1
// marks a partition with nothing to evaluate.
struct EvalReport {
  std::map<std::string, double> metrics;
  std::map<std::string, std::map<std::string, double>> partitions;
  std::map<std::string, std::int64_t> counts;
  std::map<std::string, std::string> info;

  // Deterministic: keys sorted, doubles printed round-trip exact.
  std::string to_json() const;
  std::string to_text() const;
};

}  // namespace mmgd

#endif  // MMGD_REPORT_H_
