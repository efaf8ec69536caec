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

#ifndef MMGD_TEXT_H_
#define MMGD_TEXT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mmgd/sample.h"

namespace mmgd {

// Token string <-> dense id. Ids 0..2 are reserved.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnknown = 1;
  static constexpr int kSeparator = 2;

  Vocabulary();

  // Specials followed by the distinct lowercased words of `texts`, sorted.
  static Vocabulary from_texts(std::span<const std::string> texts);
  // One token per line; the line number is the id.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  // Returns the existing id when already present.
  int add(std::string token);
  // kUnknown for out-of-vocabulary tokens.
  int id(std::string_view token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const CharSpan&) const = default;
};

struct PhraseGroup {
  int phrase_id = 0;
  std::vector<std::size_t> tokens;
};

struct TokenizedCaption {
  std::string text;
  std::vector<int> token_ids;
  std::vector<CharSpan> char_spans;
  std::vector<PhraseGroup> phrase_groups;
  std::size_t max_len = 0;

  std::size_t size() const { return token_ids.size(); }
  const PhraseGroup* find_group(int phrase_id) const;
  // Character range from the group's first token start to last token end.
  CharSpan group_range(const PhraseGroup& group) const;
};

// Binary [instances x tokens] supervision matrix.
struct PositiveMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> cells;

  bool at(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }
  std::vector<double> row(std::size_t r) const;
};

inline constexpr std::size_t kDefaultMaxTokens = 64;

// Lowercases, splits on whitespace and emits every '.' as a separator token.
// Phrases (character spans into `text`) become token groups; a phrase must
// start and end on token boundaries. Captions longer than max_len are
// truncated unless that would cut a phrase, which throws ConfigError.
TokenizedCaption tokenize(const std::string& text, const Vocabulary& vocab,
                          std::size_t max_len = kDefaultMaxTokens,
                          std::span<const PhraseSpan> phrases = {});

struct AssembledCaption {
  std::string caption;
  std::vector<PhraseSpan> phrases;
};

// "a. b. c." with phrase i spanning categories[i]. Categories must be
// non-empty, free of surrounding whitespace and must not contain ". ".
AssembledCaption assemble_ovd_caption(std::span<const std::string> categories);

// Caption text and phrase spans a sample is trained/evaluated with.
AssembledCaption sample_caption(const GroundingSample& sample);

// Row i is 1 exactly on the tokens of phrase_ids[i]. Throws AnnotationError
// for a phrase id without a group.
PositiveMap build_positive_map(const TokenizedCaption& caption,
                               std::span<const int> phrase_ids);

struct NegativeAugmentation {
  std::string caption;
  std::vector<PhraseSpan> phrases;
  std::vector<int> negative_phrase_ids;
  TokenizedCaption tokens;
  PositiveMap positive_map;
};

// Appends n_neg entries drawn without replacement from `pool` to the sample's
// caption. Pool entries matching a positive phrase (case-insensitive) are
// filtered first; throws DataError if fewer than n_neg remain.
NegativeAugmentation sample_negatives(const GroundingSample& sample,
                                      std::span<const std::string> pool,
                                      std::size_t n_neg, std::uint64_t seed,
                                      const Vocabulary& vocab,
                                      std::size_t max_len = kDefaultMaxTokens);

std::string to_lower(std::string_view s);

}  // namespace mmgd

#endif  // MMGD_TEXT_H_
