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

#include <algorithm>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mmgd/error.h"
#include "mmgd/rng.h"
#include "mmgd/text.h"

namespace mmgd {
namespace {

std::string random_word(Rng& rng) {
  static const std::string kChars =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-_',";
  const std::size_t len = 1 + rng.uniform_int(7);
  std::string w;
  for (std::size_t i = 0; i < len; ++i) {
    w += kChars[rng.uniform_int(kChars.size())];
  }
  return w;
}

std::string random_category(Rng& rng) {
  std::string c = random_word(rng);
  const std::size_t extra = rng.uniform_int(3);
  for (std::size_t i = 0; i < extra; ++i) c += " " + random_word(rng);
  return c;
}

GroundingSample ovd_sample(std::vector<std::string> cats) {
  GroundingSample s;
  s.task = Task::kOvd;
  s.width = s.height = 10;
  s.categories = std::move(cats);
  return s;
}

TEST(VocabularyTest, SpecialsAndLookup) {
  const std::vector<std::string> texts = {"Cat. dog", "cat bird."};
  const Vocabulary v = Vocabulary::from_texts(texts);
  EXPECT_EQ(v.token(Vocabulary::kPad), "[PAD]");
  EXPECT_EQ(v.token(Vocabulary::kUnknown), "[UNK]");
  EXPECT_EQ(v.token(Vocabulary::kSeparator), ".");
  EXPECT_EQ(v.size(), 6u);
  EXPECT_EQ(v.token(3), "bird");
  EXPECT_EQ(v.id("cat"), 4);
  EXPECT_EQ(v.id("zebra"), Vocabulary::kUnknown);
  EXPECT_THROW(v.token(99), ConfigError);
}

TEST(VocabularyTest, FileRoundTrip) {
  const std::vector<std::string> texts = {"red green. blue"};
  const Vocabulary v = Vocabulary::from_texts(texts);
  const auto path = std::filesystem::temp_directory_path() / "mmgd_vocab.txt";
  v.save(path);
  const Vocabulary w = Vocabulary::load(path);
  ASSERT_EQ(w.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(w.token(static_cast<int>(i)), v.token(static_cast<int>(i)));
  }
  std::filesystem::remove(path);
}

TEST(TokenizeTest, CatExample) {
  const Vocabulary v = Vocabulary::from_texts(std::vector<std::string>{"cat"});
  const TokenizedCaption t = tokenize("Cat.", v);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(v.token(t.token_ids[0]), "cat");
  EXPECT_EQ(t.token_ids[1], Vocabulary::kSeparator);
  EXPECT_EQ(t.char_spans[0], (CharSpan{0, 3}));
  EXPECT_EQ(t.char_spans[1], (CharSpan{3, 4}));
}

TEST(TokenizeTest, FourCategoryCaptionHasEightTokensFourGroups) {
  const std::vector<std::string> cats = {"People", "Ball", "Racket", "Cat"};
  const AssembledCaption a = assemble_ovd_caption(cats);
  EXPECT_EQ(a.caption, "People. Ball. Racket. Cat.");
  const TokenizedCaption t =
      tokenize(a.caption, Vocabulary::from_texts(cats), 64, a.phrases);
  EXPECT_EQ(t.size(), 8u);
  ASSERT_EQ(t.phrase_groups.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    const CharSpan r = t.group_range(t.phrase_groups[i]);
    EXPECT_EQ(a.caption.substr(r.begin, r.end - r.begin), cats[i]);
  }
}

TEST(TokenizeTest, Errors) {
  const Vocabulary v;
  EXPECT_THROW(tokenize("", v), ConfigError);
  const std::vector<PhraseSpan> bad = {{0, 1, 3, {}}};
  EXPECT_THROW(tokenize("hello world", v, 64, bad), AnnotationError);
  const std::vector<PhraseSpan> late = {{0, 6, 11, {}}};
  EXPECT_THROW(tokenize("hello world", v, 1, late), ConfigError);
  // Truncation that spares every phrase is allowed.
  const std::vector<PhraseSpan> early = {{0, 0, 5, {}}};
  EXPECT_EQ(tokenize("hello world again", v, 2, early).size(), 2u);
}

TEST(TokenizeTest, UnknownWords) {
  const Vocabulary v = Vocabulary::from_texts(std::vector<std::string>{"a"});
  const TokenizedCaption t = tokenize("a b", v);
  EXPECT_EQ(t.token_ids[1], Vocabulary::kUnknown);
}

TEST(AssembleTest, SingletonAndErrors) {
  EXPECT_EQ(assemble_ovd_caption(std::vector<std::string>{"dog"}).caption,
            "dog.");
  EXPECT_THROW(assemble_ovd_caption(std::vector<std::string>{}), DataError);
  EXPECT_THROW(assemble_ovd_caption(std::vector<std::string>{"a. b"}),
               DataError);
  EXPECT_THROW(assemble_ovd_caption(std::vector<std::string>{" pad"}),
               DataError);
}

TEST(AssembleProperty, SpanRoundTripThousandLists) {
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> cats;
    const std::size_t n = 1 + rng.uniform_int(6);
    for (std::size_t i = 0; i < n; ++i) cats.push_back(random_category(rng));
    const AssembledCaption a = assemble_ovd_caption(cats);
    const TokenizedCaption t = tokenize(a.caption, Vocabulary(), 256,
                                        a.phrases);
    ASSERT_EQ(t.phrase_groups.size(), n);
    for (std::size_t i = 0; i < n; ++i) {
      const PhraseGroup* g = t.find_group(static_cast<int>(i));
      ASSERT_NE(g, nullptr);
      const CharSpan r = t.group_range(*g);
      ASSERT_EQ(a.caption.substr(r.begin, r.end - r.begin), cats[i]);
      for (std::size_t k : g->tokens) ASSERT_LT(k, t.size());
    }
    for (std::size_t k = 1; k < t.size(); ++k) {
      ASSERT_LE(t.char_spans[k - 1].end, t.char_spans[k].begin);
    }
  }
}

TEST(PositiveMapTest, RowsFollowGroups) {
  GroundingSample s;
  s.task = Task::kPg;
  s.caption = "a red cat";
  s.phrases = {{7, 0, 9, {}}};
  const TokenizedCaption t = tokenize(s.caption, Vocabulary(), 64, s.phrases);
  const std::vector<int> one = {7};
  const PositiveMap m = build_positive_map(t, one);
  EXPECT_EQ(m.row(0), (std::vector<double>{1, 1, 1}));
  const std::vector<int> two = {7, 7};
  const PositiveMap m2 = build_positive_map(t, two);
  EXPECT_EQ(m2.row(0), m2.row(1));
  const std::vector<int> dangling = {3};
  EXPECT_THROW(build_positive_map(t, dangling), AnnotationError);
}

TEST(PositiveMapProperty, SupportEqualsGroup) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> cats;
    const std::size_t n = 1 + rng.uniform_int(5);
    for (std::size_t i = 0; i < n; ++i) cats.push_back(random_category(rng));
    const AssembledCaption a = assemble_ovd_caption(cats);
    const TokenizedCaption t = tokenize(a.caption, Vocabulary(), 256,
                                        a.phrases);
    std::vector<int> ids;
    for (std::size_t k = 0; k < 1 + rng.uniform_int(6); ++k) {
      ids.push_back(static_cast<int>(rng.uniform_int(n)));
    }
    const PositiveMap m = build_positive_map(t, ids);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      const PhraseGroup* g = t.find_group(ids[r]);
      const std::set<std::size_t> expect(g->tokens.begin(), g->tokens.end());
      std::set<std::size_t> got;
      for (std::size_t c = 0; c < m.cols; ++c) {
        if (m.at(r, c)) got.insert(c);
      }
      ASSERT_EQ(got, expect);
      ASSERT_FALSE(got.empty());
    }
  }
}

TEST(NegativesTest, ZeroNegativesLeavesCaption) {
  GroundingSample s = ovd_sample({"cat"});
  s.instances.push_back({{0, 0, 1, 1}, 0, -1});
  const std::vector<std::string> pool = {"dog"};
  const auto aug = sample_negatives(s, pool, 0, 1, Vocabulary());
  EXPECT_EQ(aug.caption, "cat.");
  EXPECT_EQ(aug.positive_map.row(0), (std::vector<double>{1, 0}));
}

TEST(NegativesTest, AppendedTokensCarryNoMass) {
  GroundingSample s = ovd_sample({"cat"});
  s.instances.push_back({{0, 0, 1, 1}, 0, -1});
  const std::vector<std::string> pool = {"dog", "car"};
  const auto aug = sample_negatives(s, pool, 2, 5, Vocabulary());
  EXPECT_TRUE(aug.caption == "cat. dog. car." || aug.caption == "cat. car. dog.")
      << aug.caption;
  ASSERT_EQ(aug.positive_map.cols, 6u);
  EXPECT_EQ(aug.positive_map.row(0),
            (std::vector<double>{1, 0, 0, 0, 0, 0}));
  EXPECT_EQ(aug.negative_phrase_ids.size(), 2u);
}

TEST(NegativesTest, PoolTooSmall) {
  GroundingSample s = ovd_sample({"cat"});
  const std::vector<std::string> pool = {"CAT", "dog"};
  EXPECT_THROW(sample_negatives(s, pool, 2, 0, Vocabulary()), DataError);
}

TEST(NegativesProperty, PositivesNeverDrawnAndSeedReproducible) {
  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> cats = {random_word(rng), random_word(rng)};
    if (to_lower(cats[0]) == to_lower(cats[1])) continue;
    GroundingSample s = ovd_sample(cats);
    std::vector<std::string> pool;
    for (int k = 0; k < 4; ++k) pool.push_back(random_word(rng));
    // Case-flipped duplicate of a positive.
    std::string dup = cats[0];
    for (char& c : dup) c = static_cast<char>(std::toupper(c));
    pool.push_back(dup);
    std::set<std::string> usable;
    for (const auto& p : pool) {
      if (to_lower(p) != to_lower(cats[0]) && to_lower(p) != to_lower(cats[1]))
        usable.insert(to_lower(p));
    }
    const std::size_t n = std::min<std::size_t>(2, usable.size());
    const std::uint64_t seed = rng.next_u64();
    const auto a = sample_negatives(s, pool, n, seed, Vocabulary());
    const auto b = sample_negatives(s, pool, n, seed, Vocabulary());
    ASSERT_EQ(a.caption, b.caption);
    for (int id : a.negative_phrase_ids) {
      const auto& p = a.phrases[static_cast<std::size_t>(id)];
      const std::string text = to_lower(a.caption.substr(p.begin, p.end - p.begin));
      ASSERT_NE(text, to_lower(cats[0]));
      ASSERT_NE(text, to_lower(cats[1]));
    }
  }
}

}  // namespace
}  // namespace mmgd
