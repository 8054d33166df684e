// Copyright 2026 The latte Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <sstream>
#include <unordered_set>

#include "latte/ingest.hpp"
#include "latte/rng.hpp"

namespace {

using latte::EmbeddingTable;
using latte::Tensor2;
using latte::TokenMatrix;

EmbeddingTable table_from(const std::string& text, const latte::GloveOptions& opts = {}) {
  std::istringstream in(text);
  return latte::parse_glove_text(in, opts);
}

TEST(Glove, MinimalFile) {
  const auto t = table_from("a 1.0 0.0\nb 0.0 1.0\n");
  EXPECT_EQ(t.dim(), 2u);
  EXPECT_EQ(t.size(), 2u);
  ASSERT_TRUE(t.find("b"));
  EXPECT_EQ(t.vector(*t.find("b"))[1], 1.0f);
}

TEST(Glove, DimensionMismatch) {
  EXPECT_THROW(table_from("a 1.0\nb 1.0 2.0\n"), latte::FormatError);
}

TEST(Glove, NonNumericAndEmpty) {
  EXPECT_THROW(table_from("a 1.0 x\n"), latte::FormatError);
  EXPECT_THROW(table_from("a 1.0 nan\n"), latte::FormatError);
  EXPECT_THROW(table_from("\n\n"), latte::FormatError);
}

TEST(Glove, DuplicateLastWins) {
  const auto t = table_from("a 1 2\na 3 4\n");
  EXPECT_EQ(t.size(), 1u);
  EXPECT_EQ(t.duplicates(), 1u);
  EXPECT_EQ(t.vector(0)[0], 3.0f);
}

TEST(Glove, ThreeHundredDimensionalLine) {
  std::string line = ",";
  for (int i = 0; i < 300; ++i) line += " " + std::to_string(0.001 * (i - 150));
  const auto t = table_from(line + "\n");
  EXPECT_EQ(t.dim(), 300u);
  EXPECT_NEAR(t.vector(*t.find(","))[299], 0.149, 1e-6);
}

TEST(Glove, KeepFilterAndSpacedTokens) {
  const std::unordered_set<std::string> keep{"cat", "new york"};
  latte::GloveOptions opts;
  opts.keep = &keep;
  opts.join_spaced_tokens = true;
  const auto t = table_from("Cat 1 2\ndog 3 4\nnew york 5 6\n", opts);
  EXPECT_EQ(t.size(), 2u);
  EXPECT_TRUE(t.find("Cat"));
  EXPECT_TRUE(t.find("new york"));
  EXPECT_FALSE(t.find("dog"));
  EXPECT_THROW(table_from("a 1 2\nnew york 5 6\n"), latte::FormatError);
}

TEST(Tokenize, LooksUpRowsInOrder) {
  const auto t = table_from("the 1 0\ncat 0 1\n");
  const TokenMatrix m = latte::tokenize_static("The cat.", t);
  EXPECT_EQ(m.rows, Tensor2::from_rows({{1, 0}, {0, 1}}));
  EXPECT_EQ(m.tokens, (std::vector<std::string>{"the", "cat"}));
  const TokenMatrix mixed = latte::tokenize_static("CAT the", t);
  EXPECT_EQ(mixed.tokens, (std::vector<std::string>{"cat", "the"}));
  EXPECT_EQ(mixed.rows, Tensor2::from_rows({{0, 1}, {1, 0}}));
}

TEST(Tokenize, AllOovThrowsAndCounts) {
  const auto t = table_from("the 1 0\ncat 0 1\n");
  EXPECT_THROW(latte::tokenize_static("zzzz qqqq", t), latte::DataError);
  std::size_t oov = 0;
  latte::tokenize_static("the zzzz cat qqqq", t, &oov);
  EXPECT_EQ(oov, 2u);
}

TEST(Tokenize, PunctuationHandling) {
  EXPECT_EQ(latte::static_tokens("  \"Hello,\" she said -- ok!  "),
            (std::vector<std::string>{"hello", "she", "said", "ok"}));
  EXPECT_EQ(latte::static_tokens("don't"), (std::vector<std::string>{"don't"}));
}

TokenMatrix random_sentence(latte::SeededRng& rng, std::size_t k, std::size_t d, bool tokens) {
  TokenMatrix m{Tensor2(k, d), {}};
  for (double& v : m.rows.values()) v = static_cast<double>(static_cast<float>(rng.normal()));
  if (tokens) {
    for (std::size_t i = 0; i < k; ++i) m.tokens.push_back("tok" + std::to_string(rng.index(1000)));
  }
  return m;
}

TEST(Dump, RoundTrip) {
  latte::SeededRng rng(4);
  const std::vector<TokenMatrix> in{random_sentence(rng, 3, 4, true),
                                    random_sentence(rng, 1, 4, false)};
  std::stringstream buf;
  latte::write_dump(in, buf);
  EXPECT_EQ(latte::read_dump(buf), in);
}

TEST(Dump, BadMagicVersionAndTruncation) {
  latte::SeededRng rng(5);
  const std::vector<TokenMatrix> in{random_sentence(rng, 2, 3, true)};
  std::stringstream buf;
  latte::write_dump(in, buf);
  const std::string bytes = buf.str();

  std::istringstream bad_magic("XXXX" + bytes.substr(4));
  EXPECT_THROW(latte::read_dump(bad_magic), latte::FormatError);

  std::string wrong_version = bytes;
  wrong_version[4] = 2;
  std::istringstream version_in(wrong_version);
  EXPECT_THROW(latte::read_dump(version_in), latte::FormatError);

  for (std::size_t cut : {std::size_t{3}, std::size_t{15}, bytes.size() - 1}) {
    std::istringstream truncated(bytes.substr(0, cut));
    EXPECT_THROW(latte::read_dump(truncated), latte::FormatError) << "cut=" << cut;
  }
}

TEST(Dump, ByteLengthOfLargeDump) {
  latte::SeededRng rng(6);
  constexpr std::size_t kSentences = 10000, kDim = 4;
  std::vector<TokenMatrix> in;
  std::uint64_t expected = 4 + 4 + 4 + 4;
  for (std::size_t i = 0; i < kSentences; ++i) {
    const std::size_t k = 1 + rng.index(6);
    in.push_back(random_sentence(rng, k, kDim, i % 3 != 0));
    std::uint64_t block = 0;
    for (std::size_t t = 0; t < in.back().tokens.size(); ++t) {
      block += in.back().tokens[t].size() + (t > 0 ? 1 : 0);
    }
    expected += 4 + 4 * k * kDim + 4 + block;
  }
  std::stringstream buf;
  EXPECT_EQ(latte::write_dump(in, buf), expected);
  EXPECT_EQ(buf.str().size(), expected);
  EXPECT_EQ(latte::read_dump(buf).size(), kSentences);
}

TEST(Dump, RejectsMixedDimensionsAndEmptySentences) {
  std::stringstream buf;
  const std::vector<TokenMatrix> mixed{{Tensor2(1, 2), {}}, {Tensor2(1, 3), {}}};
  EXPECT_THROW(latte::write_dump(mixed, buf), latte::ShapeError);
  const std::vector<TokenMatrix> empty{{Tensor2(0, 2), {}}};
  EXPECT_THROW(latte::write_dump(empty, buf), latte::DataError);
}

TEST(StsTsv, ParsesPairs) {
  std::istringstream in("4.5\tA dog runs.\tA dog is running.\n\n0\tx\ty\r\n");
  const auto pairs = latte::parse_sts_tsv(in);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].gold, 4.5);
  EXPECT_EQ(pairs[0].sentence_a, "A dog runs.");
  EXPECT_EQ(pairs[0].sentence_b, "A dog is running.");
  EXPECT_EQ(pairs[1].sentence_b, "y");
}

TEST(StsTsv, BenchmarkLayout) {
  std::istringstream in("main-captions\tMSRvid\t2012test\t0001\t5.000\tA girl.\tA girl!\n");
  const auto pairs = latte::parse_sts_tsv(in);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].gold, 5.0);
  EXPECT_EQ(pairs[0].sentence_a, "A girl.");
}

TEST(StsTsv, Errors) {
  std::istringstream bad_score("x\ta\tb\n");
  EXPECT_THROW(latte::parse_sts_tsv(bad_score), latte::FormatError);
  std::istringstream bad_fields("1\ta\n");
  EXPECT_THROW(latte::parse_sts_tsv(bad_fields), latte::FormatError);
}

TEST(Corpus, SkipsBlankLines) {
  std::istringstream in("one\n\n  two  \n");
  EXPECT_EQ(latte::read_corpus(in).sentences, (std::vector<std::string>{"one", "two"}));
  std::istringstream empty("\n \n");
  EXPECT_THROW(latte::read_corpus(empty), latte::DataError);
}

}  // namespace
