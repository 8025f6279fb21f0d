// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

#include <map>
#include <random>

#include <gtest/gtest.h>

#include "taskrisk/synthetic.hpp"
#include "taskrisk/tokenizer.hpp"
#include "test_support.hpp"

using namespace taskrisk;

namespace {

Vocabulary run_vocab() { return Vocabulary::from_tokens({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "run", "##ning", "a"}); }

void expect_well_formed(const TokenSequence& s, std::size_t max_len) {
  ASSERT_EQ(s.ids.size(), max_len);
  ASSERT_EQ(s.mask.size(), max_len);
  ASSERT_GE(s.true_length, 2);
  ASSERT_LE(static_cast<std::size_t>(s.true_length), max_len);
  EXPECT_EQ(s.ids[0], Vocabulary::kCls);
  EXPECT_EQ(s.ids[s.true_length - 1], Vocabulary::kSep);
  for (std::size_t t = 0; t < max_len; ++t) {
    EXPECT_EQ(s.mask[t], t < static_cast<std::size_t>(s.true_length) ? 1 : 0);
    if (t >= static_cast<std::size_t>(s.true_length)) {
      EXPECT_EQ(s.ids[t], Vocabulary::kPad);
    }
  }
}

}  // namespace

TEST(Vocab, RepeatedWordBecomesWholeToken) {
  const auto v = build_vocab({"aa aa", "aa"}, 10);
  EXPECT_TRUE(v.contains("aa"));
  EXPECT_TRUE(v.contains("a"));
  EXPECT_TRUE(v.contains("##a"));
  EXPECT_LE(v.size(), 10u);
  for (int i = 0; i < Vocabulary::kNumSpecial; ++i) EXPECT_TRUE(Vocabulary::is_special(i));
  EXPECT_EQ(v.token(0), "[PAD]");
  EXPECT_EQ(v.token(3), "[SEP]");
}

TEST(Vocab, EmptyCorpus) {
  EXPECT_TASKRISK_ERROR(build_vocab({}, 10), EmptyCorpus);
  EXPECT_TASKRISK_ERROR(build_vocab({" ", "\t"}, 10), EmptyCorpus);
}

TEST(Vocab, DeterministicFiles) {
  taskrisk::testing::TempDir dir;
  std::vector<std::string> texts;
  for (const auto& e : synthetic::keyword_corpus()) texts.push_back(e.task.text);
  build_vocab(texts, 300).save(dir / "a.txt");
  build_vocab(texts, 300).save(dir / "b.txt");
  EXPECT_EQ(taskrisk::testing::read_file(dir / "a.txt"), taskrisk::testing::read_file(dir / "b.txt"));
  const auto back = Vocabulary::load(dir / "a.txt");
  EXPECT_EQ(back.tokens(), build_vocab(texts, 300).tokens());
}

TEST(Vocab, SizeCapAndFrequencyFloor) {
  const std::vector<std::string> texts = {"alpha beta gamma", "alpha beta", "alpha"};
  EXPECT_LE(build_vocab(texts, 12).size(), 12u);
  const auto strict = build_vocab(texts, 200, 3);
  EXPECT_FALSE(strict.contains("gamma"));
  EXPECT_TASKRISK_ERROR(build_vocab(texts, 4), InvalidArgument);
}

TEST(Vocab, RejectsMalformedTokenLists) {
  EXPECT_TASKRISK_ERROR(Vocabulary::from_tokens({"[PAD]", "[UNK]"}), InvalidArgument);
  EXPECT_TASKRISK_ERROR(Vocabulary::from_tokens({"[UNK]", "[PAD]", "[CLS]", "[SEP]"}), InvalidArgument);
  EXPECT_TASKRISK_ERROR(Vocabulary::from_tokens({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "x", "x"}), DuplicateId);
}

TEST(Encode, EmptyString) {
  const auto s = encode("", run_vocab(), 6);
  EXPECT_EQ(s.true_length, 2);
  EXPECT_EQ(s.ids, (std::vector<int>{2, 3, 0, 0, 0, 0}));
  expect_well_formed(s, 6);
}

TEST(Encode, GreedyLongestMatch) {
  const auto v = run_vocab();
  const auto s = encode("running", v, 8);
  EXPECT_EQ(std::vector<int>(s.ids.begin(), s.ids.begin() + s.true_length),
            (std::vector<int>{Vocabulary::kCls, *v.id("run"), *v.id("##ning"), Vocabulary::kSep}));
  EXPECT_EQ(decode(s.ids, v), "running");
}

TEST(Encode, UnknownPiecesAndCase) {
  const auto v = run_vocab();
  const auto s = encode("RUN, runx", v, 10);
  // run , run [UNK]
  EXPECT_EQ(std::vector<int>(s.ids.begin() + 1, s.ids.begin() + s.true_length - 1),
            (std::vector<int>{4, Vocabulary::kUnk, 4, Vocabulary::kUnk}));
}

TEST(Encode, TruncationBound) {
  const auto v = run_vocab();
  for (const char* text : {"", "a", "a a a a a", "running running"}) {
    const auto s = encode(text, v, 3);
    expect_well_formed(s, 3);
    EXPECT_LE(s.true_length - 2, 1);
  }
  EXPECT_TASKRISK_ERROR(encode("a", v, 2), InvalidArgument);
}

TEST(Encode, RandomUtf8IsAlwaysWellFormed) {
  std::vector<std::string> texts;
  for (const auto& e : synthetic::keyword_corpus()) texts.push_back(e.task.text);
  const auto v = build_vocab(texts, 200);
  std::mt19937 gen(3);
  const std::vector<std::string> alphabet = {"a", "Z", " ", ".", "\xC3\xA9", "\xE2\x80\x94", "\xF0\x9F\x98\x80",
                                             "\xFF", "\xC3", "\t", "##", "review", "\xE3\x80\x80"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string s;
    const int n = static_cast<int>(gen() % 40);
    for (int i = 0; i < n; ++i) s += alphabet[gen() % alphabet.size()];
    const std::size_t max_len = 3 + gen() % 20;
    expect_well_formed(encode(s, v, max_len), max_len);
  }
}

TEST(PreTokenize, SplitsOnWhitespaceAndPunctuation) {
  const auto words = pre_tokenize("Hello, World!  x");
  std::vector<std::string> got;
  for (const auto& w : words) got.push_back(utf8::encode(w));
  EXPECT_EQ(got, (std::vector<std::string>{"hello", ",", "world", "!", "x"}));
}
