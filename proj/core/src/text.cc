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

#include "mmgd/text.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <unordered_set>

#include "mmgd/error.h"
#include "mmgd/rng.h"

namespace mmgd {
namespace {

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

struct RawToken {
  std::string text;
  CharSpan span;
};

std::vector<RawToken> split_tokens(const std::string& text) {
  std::vector<RawToken> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
    } else if (text[i] == '.') {
      out.push_back({".", {i, i + 1}});
      ++i;
    } else {
      std::size_t j = i;
      while (j < text.size() && !is_space(text[j]) && text[j] != '.') ++j;
      out.push_back({to_lower(std::string_view(text).substr(i, j - i)), {i, j}});
      i = j;
    }
  }
  return out;
}

void check_category(const std::string& c) {
  if (c.empty() || std::all_of(c.begin(), c.end(), is_space)) {
    throw DataError("category name must be non-empty");
  }
  if (is_space(c.front()) || is_space(c.back())) {
    throw DataError("category '" + c + "' has surrounding whitespace");
  }
  if (c.find(". ") != std::string::npos) {
    throw DataError("category '" + c + "' contains the separator \". \"");
  }
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

Vocabulary::Vocabulary() {
  add("[PAD]");
  add("[UNK]");
  add(".");
}

Vocabulary Vocabulary::from_texts(std::span<const std::string> texts) {
  std::set<std::string> words;
  for (const std::string& t : texts) {
    for (RawToken& tok : split_tokens(t)) {
      if (tok.text != ".") words.insert(std::move(tok.text));
    }
  }
  Vocabulary v;
  for (const std::string& w : words) v.add(w);
  return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary file " + path.string());
  Vocabulary v;
  v.tokens_.clear();
  v.ids_.clear();
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (v.ids_.count(line)) {
      throw DataError("duplicate vocabulary token '" + line + "' on line " +
                      std::to_string(line_no));
    }
    v.add(line);
  }
  if (v.size() < 3 || v.tokens_[kPad] != "[PAD]" ||
      v.tokens_[kUnknown] != "[UNK]" || v.tokens_[kSeparator] != ".") {
    throw DataError("vocabulary " + path.string() +
                    " must start with [PAD], [UNK], '.'");
  }
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary file " + path.string());
  for (const std::string& t : tokens_) out << t << '\n';
}

int Vocabulary::add(std::string token) {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  ids_.emplace(token, id);
  tokens_.push_back(std::move(token));
  return id;
}

int Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnknown : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw ConfigError("token id " + std::to_string(id) +
                      " outside vocabulary of size " +
                      std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

const PhraseGroup* TokenizedCaption::find_group(int phrase_id) const {
  for (const PhraseGroup& g : phrase_groups) {
    if (g.phrase_id == phrase_id) return &g;
  }
  return nullptr;
}

CharSpan TokenizedCaption::group_range(const PhraseGroup& group) const {
  return {char_spans[group.tokens.front()].begin,
          char_spans[group.tokens.back()].end};
}

std::vector<double> PositiveMap::row(std::size_t r) const {
  std::vector<double> out(cols);
  for (std::size_t c = 0; c < cols; ++c) out[c] = cells[r * cols + c];
  return out;
}

TokenizedCaption tokenize(const std::string& text, const Vocabulary& vocab,
                          std::size_t max_len,
                          std::span<const PhraseSpan> phrases) {
  if (text.empty()) throw ConfigError("cannot tokenize an empty caption");
  if (max_len == 0) throw ConfigError("max_len must be positive");
  std::vector<RawToken> raw = split_tokens(text);

  TokenizedCaption out;
  out.text = text;
  out.max_len = max_len;
  for (const PhraseSpan& p : phrases) {
    if (p.begin >= p.end || p.end > text.size()) {
      throw AnnotationError("phrase " + std::to_string(p.id) +
                            " has an invalid character range");
    }
    PhraseGroup group{p.id, {}};
    for (std::size_t t = 0; t < raw.size(); ++t) {
      const CharSpan s = raw[t].span;
      if (s.end <= p.begin || s.begin >= p.end) continue;
      if (s.begin < p.begin || s.end > p.end) {
        throw AnnotationError("phrase '" + text.substr(p.begin, p.end - p.begin) +
                              "' does not align with token boundaries");
      }
      group.tokens.push_back(t);
    }
    if (group.tokens.empty()) {
      throw AnnotationError("phrase " + std::to_string(p.id) +
                            " covers no tokens");
    }
    if (group.tokens.back() >= max_len) {
      throw ConfigError("caption exceeds max_len " + std::to_string(max_len) +
                        " tokens and would truncate phrase '" +
                        text.substr(p.begin, p.end - p.begin) + "'");
    }
    out.phrase_groups.push_back(std::move(group));
  }
  const std::size_t n = std::min(raw.size(), max_len);
  for (std::size_t t = 0; t < n; ++t) {
    out.token_ids.push_back(vocab.id(raw[t].text));
    out.char_spans.push_back(raw[t].span);
  }
  if (out.token_ids.empty()) {
    throw ConfigError("caption contains no tokens");
  }
  return out;
}

AssembledCaption assemble_ovd_caption(std::span<const std::string> categories) {
  if (categories.empty()) {
    throw DataError("cannot assemble a caption from zero categories");
  }
  AssembledCaption out;
  for (std::size_t i = 0; i < categories.size(); ++i) {
    check_category(categories[i]);
    if (i) out.caption += ". ";
    const std::size_t begin = out.caption.size();
    out.caption += categories[i];
    out.phrases.push_back(
        {static_cast<int>(i), begin, out.caption.size(), {}});
  }
  out.caption += ".";
  return out;
}

AssembledCaption sample_caption(const GroundingSample& sample) {
  if (sample.task == Task::kOvd) return assemble_ovd_caption(sample.categories);
  return {sample.caption, sample.phrases};
}

PositiveMap build_positive_map(const TokenizedCaption& caption,
                               std::span<const int> phrase_ids) {
  PositiveMap map;
  map.rows = phrase_ids.size();
  map.cols = caption.size();
  map.cells.assign(map.rows * map.cols, 0);
  for (std::size_t r = 0; r < phrase_ids.size(); ++r) {
    const PhraseGroup* g = caption.find_group(phrase_ids[r]);
    if (g == nullptr) {
      throw AnnotationError("instance references unknown phrase id " +
                            std::to_string(phrase_ids[r]));
    }
    for (std::size_t t : g->tokens) map.cells[r * map.cols + t] = 1;
  }
  return map;
}

NegativeAugmentation sample_negatives(const GroundingSample& sample,
                                      std::span<const std::string> pool,
                                      std::size_t n_neg, std::uint64_t seed,
                                      const Vocabulary& vocab,
                                      std::size_t max_len) {
  AssembledCaption base = sample_caption(sample);
  std::unordered_set<std::string> positives;
  int next_id = 0;
  for (const PhraseSpan& p : base.phrases) {
    positives.insert(to_lower(base.caption.substr(p.begin, p.end - p.begin)));
    next_id = std::max(next_id, p.id + 1);
  }

  std::vector<std::string> candidates;
  std::unordered_set<std::string> seen;
  for (const std::string& entry : pool) {
    const std::string key = to_lower(entry);
    if (positives.count(key) || !seen.insert(key).second) continue;
    candidates.push_back(entry);
  }
  if (candidates.size() < n_neg) {
    throw DataError("negative pool has " + std::to_string(candidates.size()) +
                    " usable entries, " + std::to_string(n_neg) + " requested");
  }

  // Partial Fisher-Yates: the first n_neg slots are the draw.
  Rng rng(seed);
  for (std::size_t i = 0; i < n_neg; ++i) {
    const std::size_t j = i + rng.uniform_int(candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
  }

  NegativeAugmentation out;
  out.caption = base.caption;
  out.phrases = base.phrases;
  if (n_neg > 0) {
    while (!out.caption.empty() && is_space(out.caption.back())) {
      out.caption.pop_back();
    }
    if (out.caption.empty() || out.caption.back() != '.') out.caption += '.';
    for (std::size_t i = 0; i < n_neg; ++i) {
      check_category(candidates[i]);
      out.caption += ' ';
      const std::size_t begin = out.caption.size();
      out.caption += candidates[i];
      out.phrases.push_back({next_id, begin, out.caption.size(), {}});
      out.negative_phrase_ids.push_back(next_id);
      ++next_id;
      out.caption += '.';
    }
  }
  out.tokens = tokenize(out.caption, vocab, max_len, out.phrases);
  std::vector<int> labels;
  for (const Instance& inst : sample.instances) {
    labels.push_back(sample.label_of(inst));
  }
  out.positive_map = build_positive_map(out.tokens, labels);
  return out;
}

}  // namespace mmgd
