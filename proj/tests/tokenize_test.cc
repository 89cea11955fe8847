#include "offdet/tokenize.h"

#include <gtest/gtest.h>

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "offdet/error.h"
#include "offdet/rng.h"
#include "oracles.h"

namespace offdet {
namespace {

using Tokens = std::vector<std::string>;

WordPieceVocab SmallVocab(std::vector<std::string> extra) {
  std::vector<std::string> t{"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
  t.insert(t.end(), extra.begin(), extra.end());
  return WordPieceVocab(t);
}

TEST(BasicTokenize, Punctuation) {
  EXPECT_EQ(BasicTokenize("Hello, world!", true), (Tokens{"hello", ",", "world", "!"}));
  EXPECT_EQ(BasicTokenize("Hello, world!", false), (Tokens{"Hello", ",", "world", "!"}));
}

TEST(BasicTokenize, EmptyAndWhitespace) {
  EXPECT_TRUE(BasicTokenize("", true).empty());
  EXPECT_EQ(BasicTokenize("a  b", true), (Tokens{"a", "b"}));
  EXPECT_EQ(BasicTokenize(" \t\na\r\n", true), (Tokens{"a"}));
}

TEST(BasicTokenize, NonAscii) {
  EXPECT_EQ(BasicTokenize("ÇOK güzel…", true), (Tokens{"çok", "güzel", "…"}));
  EXPECT_EQ(BasicTokenize("Ωμέγα", true), (Tokens{"ωμέγα"}));
}

TEST(WordPiece, Examples) {
  const WordPieceVocab v = SmallVocab({"un", "able", "##able"});
  EXPECT_EQ(WordPieceTokenize("unable", v), (Tokens{"un", "##able"}));
  EXPECT_EQ(WordPieceTokenize("able", v), (Tokens{"able"}));
  EXPECT_EQ(WordPieceTokenize("xyz", v), (Tokens{"[UNK]"}));
  EXPECT_EQ(WordPieceTokenize("unx", v), (Tokens{"[UNK]"}));
}

TEST(WordPiece, GreedyDoesNotBacktrack) {
  // "ab"+"##c" would not cover "abcd", and the greedy pick "abc" dead-ends.
  const WordPieceVocab v = SmallVocab({"a", "ab", "abc", "##bcd", "##cd"});
  EXPECT_EQ(WordPieceTokenize("abcd", v), (Tokens{"[UNK]"}));
  EXPECT_EQ(WordPieceTokenize("abcd", SmallVocab({"a", "ab", "##cd"})), (Tokens{"ab", "##cd"}));
}

TEST(WordPiece, LongWordIsUnk) {
  const WordPieceVocab v = SmallVocab({"a", "##a"});
  EXPECT_EQ(WordPieceTokenize(std::string(100, 'a'), v).size(), 100u);
  EXPECT_EQ(WordPieceTokenize(std::string(101, 'a'), v), (Tokens{"[UNK]"}));
}

TEST(WordPiece, MultibyteCharacters) {
  const WordPieceVocab v = SmallVocab({"gü", "##zel", "ç", "##ok"});
  EXPECT_EQ(WordPieceTokenize("güzel", v), (Tokens{"gü", "##zel"}));
  EXPECT_EQ(WordPieceTokenize("çok", v), (Tokens{"ç", "##ok"}));
}

TEST(WordPiece, MatchesBruteForceOracleAndRoundTrips) {
  SplitMix64 rng(2024);
  int segmented = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const oracle::WordPieceCase c = oracle::RandomWordPieceCase(rng);
    const WordPieceVocab v(c.vocab);
    const std::set<std::string> vs(c.vocab.begin(), c.vocab.end());
    const Tokens got = WordPieceTokenize(c.word, v);
    ASSERT_EQ(got, oracle::WordPiece(c.word, vs)) << c.word;
    if (got != Tokens{"[UNK]"}) {
      ++segmented;
      std::string joined;
      for (std::size_t i = 0; i < got.size(); ++i)
        joined += i == 0 ? got[i] : got[i].substr(2);
      ASSERT_EQ(joined, c.word);
    }
  }
  EXPECT_GT(segmented, 100);
}

TEST(Vocab, RequiresSpecialsAndRejectsDuplicates) {
  EXPECT_THROW(WordPieceVocab({"a", "b"}), UsageError);
  EXPECT_THROW(SmallVocab({"a", "a"}), UsageError);
}

TEST(Vocab, ParseWriteRoundTrip) {
  const WordPieceVocab v = SmallVocab({"hello", "##lo", "x"});
  std::stringstream buf;
  v.Write(buf);
  const WordPieceVocab back = WordPieceVocab::Parse(buf);
  EXPECT_EQ(back, v);
  EXPECT_EQ(back.Id("hello"), 4);
  EXPECT_EQ(back.Id("nope"), back.unk_id());
}

TEST(Vocab, BuildFromCorpusCoversEveryWord) {
  const std::vector<Tokens> corpus{{"the", "cat", "sat"}, {"the", "dog"}, {"a", "cat", "zebra"}};
  const WordPieceVocab v = BuildVocab(corpus, 2, 1000);
  EXPECT_TRUE(v.Contains("the"));
  EXPECT_TRUE(v.Contains("cat"));
  EXPECT_FALSE(v.Contains("zebra"));
  EXPECT_TRUE(v.Contains("##z"));
  for (const Tokens& doc : corpus)
    for (const std::string& w : doc) EXPECT_NE(WordPieceTokenize(w, v), Tokens{"[UNK]"}) << w;
  const WordPieceVocab capped = BuildVocab(corpus, 1, v.size() - 1);
  EXPECT_EQ(capped.size(), v.size() - 1);
}

TEST(NGrams, Examples) {
  const std::string sep(kNGramSeparator);
  EXPECT_EQ(ExtractNgrams({"a", "b", "c"}, {NGramUnit::kWord, {2}}),
            (Tokens{"a" + sep + "b", "b" + sep + "c"}));
  EXPECT_TRUE(ExtractNgrams({"a"}, {NGramUnit::kWord, {2}}).empty());
  const Tokens chars = ExtractNgrams({"ab"}, {NGramUnit::kChar, {1, 2}});
  EXPECT_EQ(std::multiset<std::string>(chars.begin(), chars.end()),
            (std::multiset<std::string>{"a", "b", "ab"}));
  EXPECT_EQ(ExtractNgrams({"a", "b"}, {NGramUnit::kChar, {3}}), (Tokens{"a b"}));
}

TEST(NGrams, EmptyNValuesIsError) {
  EXPECT_THROW(ExtractNgrams({"a"}, {NGramUnit::kWord, {}}), UsageError);
  EXPECT_THROW(ExtractNgrams({"a"}, {NGramUnit::kWord, {0}}), UsageError);
}

TEST(NGrams, CountProperty) {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    Tokens seq;
    const std::size_t len = rng.Below(12);
    for (std::size_t i = 0; i < len; ++i) seq.push_back(std::string(1, static_cast<char>('a' + rng.Below(3))));
    const int n = 1 + static_cast<int>(rng.Below(5));
    const std::size_t want = len >= static_cast<std::size_t>(n) ? len - n + 1 : 0;
    EXPECT_EQ(ExtractNgrams(seq, {NGramUnit::kWord, {n}}).size(), want);
    EXPECT_EQ(ExtractNgrams(seq, {NGramUnit::kPosTag, {n}}).size(), want);
  }
}

}  // namespace
}  // namespace offdet
