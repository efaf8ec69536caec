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

#include "mmgd/checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mmgd/error.h"

namespace mmgd {
namespace {

std::filesystem::path with_suffix(const std::filesystem::path& stem,
                                  const char* suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

std::string encode_shape(const Shape& shape) {
  if (shape.empty()) return "scalar";
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

Shape decode_shape(const std::string& s) {
  Shape shape;
  if (s == "scalar") return shape;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    shape.push_back(static_cast<std::size_t>(std::stoull(part)));
  }
  return shape;
}

void write_le(std::ostream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_le(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t{bytes[i]} << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::size_t CheckpointManifest::parameter_count() const {
  std::size_t n = 0;
  for (const ManifestEntry& e : entries) n += shape_numel(e.shape);
  return n;
}

void save_checkpoint(const std::filesystem::path& stem,
                     const ParameterStore& params) {
  std::ofstream bin(with_suffix(stem, ".bin"), std::ios::binary);
  std::ofstream manifest(with_suffix(stem, ".manifest"), std::ios::binary);
  if (!bin || !manifest) {
    throw DataError("cannot write checkpoint " + stem.string());
  }
  manifest << "mmgd-checkpoint " << kCheckpointVersion << "\n";
  std::size_t offset = 0;
  for (const auto& [name, tensor] : params.entries()) {
    manifest << name << '\t' << encode_shape(tensor.shape()) << '\t' << offset
             << '\n';
    for (double v : tensor.data()) write_le(bin, v);
    offset += tensor.numel() * sizeof(double);
  }
}

CheckpointManifest read_manifest(const std::filesystem::path& stem) {
  const auto path = with_suffix(stem, ".manifest");
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint manifest " + path.string());
  CheckpointManifest m;
  std::string magic;
  in >> magic >> m.version;
  if (magic != "mmgd-checkpoint") {
    throw DataError(path.string() + " is not a checkpoint manifest");
  }
  if (m.version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " +
                    std::to_string(m.version));
  }
  std::string line;
  std::getline(in, line);
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    ManifestEntry e;
    std::string shape;
    std::string offset;
    if (!std::getline(ss, e.name, '\t') || !std::getline(ss, shape, '\t') ||
        !std::getline(ss, offset)) {
      throw DataError("malformed manifest line " + std::to_string(line_no) +
                      " in " + path.string());
    }
    try {
      e.shape = decode_shape(shape);
      e.byte_offset = static_cast<std::size_t>(std::stoull(offset));
    } catch (const std::exception&) {
      throw DataError("malformed manifest line " + std::to_string(line_no) +
                      " in " + path.string());
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

void load_checkpoint(const std::filesystem::path& stem,
                     ParameterStore& params) {
  const CheckpointManifest m = read_manifest(stem);
  const auto& entries = params.entries();
  if (m.entries.size() != entries.size()) {
    throw DataError("checkpoint has " + std::to_string(m.entries.size()) +
                    " tensors, model expects " +
                    std::to_string(entries.size()));
  }
  const auto bin_path = with_suffix(stem, ".bin");
  std::ifstream in(bin_path, std::ios::binary);
  if (!in) throw DataError("cannot open " + bin_path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const ManifestEntry& e = m.entries[i];
    Tensor target = entries[i].second;
    if (e.name != entries[i].first || e.shape != target.shape()) {
      throw DataError("checkpoint tensor '" + e.name + "' " +
                      shape_string(e.shape) + " does not match model tensor '" +
                      entries[i].first + "' " + shape_string(target.shape()));
    }
    const std::size_t need = e.byte_offset + target.numel() * sizeof(double);
    if (need > bytes.size()) {
      throw DataError("checkpoint data truncated at tensor '" + e.name + "'");
    }
    auto out = target.mutable_data();
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k] = read_le(bytes.data() + e.byte_offset + k * sizeof(double));
    }
  }
}

}  // namespace mmgd
