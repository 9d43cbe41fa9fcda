#include <gtest/gtest.h>

#include <map>

#include <boolrule/index.hpp>

#include "support/oracle.hpp"

using namespace boolrule;

namespace {

Corpus make(std::initializer_list<std::string> texts) {
  Corpus c;
  std::size_t i = 0;
  for (const auto& t : texts) c.add("d" + std::to_string(++i), t, {"X"});
  return c;
}

}  // namespace

TEST(MatchNgram, SingleTerm) {
  const Corpus c = make({"we cannot", "we can"});
  const InvertedIndex idx(c);
  EXPECT_EQ(idx.match_ngram(Ngram{"cannot"}, all_docs(2)), (DocSet{0}));
}

TEST(MatchNgram, PhraseLiteral) {
  const Corpus c = make({"its headquarters in ohio", "in headquarters", "headquarters of it in"});
  const InvertedIndex idx(c);
  EXPECT_EQ(idx.match_ngram(Ngram{"headquarters", "in"}, all_docs(3)), (DocSet{0}));
}

TEST(MatchNgram, OrderMatters) {
  const Corpus c = make({"not is"});
  const InvertedIndex idx(c);
  EXPECT_TRUE(idx.match_ngram(Ngram{"is", "not"}, all_docs(1)).empty());
  EXPECT_EQ(idx.match_ngram(Ngram{"not", "is"}, all_docs(1)), (DocSet{0}));
}

TEST(MatchNgram, UnknownTokenIsEmptyAndUniverseRespected) {
  const Corpus c = make({"a b c", "a b", "b c"});
  const InvertedIndex idx(c);
  EXPECT_TRUE(idx.match_ngram(Ngram{"nope"}, all_docs(3)).empty());
  EXPECT_TRUE(idx.match_ngram(Ngram{"a", "nope"}, all_docs(3)).empty());
  EXPECT_EQ(idx.match_ngram(Ngram{"b"}, DocSet{1, 2}), (DocSet{1, 2}));
  EXPECT_EQ(idx.match_ngram(Ngram{"a", "b", "c"}, all_docs(3)), (DocSet{0}));
  EXPECT_THROW(idx.match_ngram(Ngram{"a", "b", "c", "d"}, all_docs(3)), std::invalid_argument);
}

TEST(MatchNgram, RepeatedTokensInPhrase) {
  const Corpus c = make({"a a b", "a b a", "b a a a"});
  const InvertedIndex idx(c);
  EXPECT_EQ(idx.match_ngram(Ngram{"a", "a"}, all_docs(3)), (DocSet{0, 2}));
  EXPECT_EQ(idx.match_ngram(Ngram{"a", "a", "a"}, all_docs(3)), (DocSet{2}));
}

TEST(MatchNgram, EqualsNaiveScanOnRandomCorpora) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    oracle::CorpusGen gen(seed, 4 + seed % 6);
    const Corpus c = gen.corpus(200);
    const InvertedIndex idx(c);
    for (int q = 0; q < 30; ++q) {
      Ngram g;
      const std::size_t len = 1 + gen.uniform(3);
      for (std::size_t k = 0; k < len; ++k) g.push_back(gen.word());
      const auto universe = gen.subset(c.size());
      DocSet expected;
      for (auto d : universe)
        if (oracle::contains_seq(c[d].tokens, g)) expected.push_back(d);
      ASSERT_EQ(idx.match_ngram(g, universe), expected);
    }
  }
}

TEST(Index, InvariantsAndLossless) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    oracle::CorpusGen gen(seed);
    const Corpus c = gen.corpus(120);
    const InvertedIndex idx(c);
    std::size_t token_count = 0;
    for (const auto& d : c.docs()) token_count += d.tokens.size();
    std::size_t positions = 0;
    std::vector<std::vector<std::string>> rebuilt(c.size());
    for (auto& r : rebuilt) r.clear();
    std::vector<std::map<std::uint32_t, std::string>> by_pos(c.size());
    for (TokenId t = 0; t < idx.vocabulary_size(); ++t) {
      const auto& pl = idx.postings(t);
      ASSERT_TRUE(is_docset(pl.docs));
      for (std::size_t k = 0; k < pl.docs.size(); ++k) {
        const auto pos = pl.positions_of(k);
        ASSERT_FALSE(pos.empty());
        for (std::size_t i = 1; i < pos.size(); ++i) ASSERT_LT(pos[i - 1], pos[i]);
        for (auto p : pos) by_pos[pl.docs[k]][p] = idx.token(t);
        positions += pos.size();
      }
    }
    EXPECT_EQ(positions, token_count);
    for (DocOrdinal d = 0; d < c.size(); ++d) {
      std::vector<std::string> seq;
      for (const auto& [p, tok] : by_pos[d]) seq.push_back(tok);
      EXPECT_EQ(seq, c[d].tokens);
    }
  }
}

TEST(Vocabulary, BruteForceExamples) {
  const Corpus c = make({"a b", "a c"});
  const InvertedIndex idx(c);
  EXPECT_EQ(vocabulary(idx, all_docs(2), 1, 2), (std::vector<NgramRecord>{{{"a"}, 2}}));

  const Corpus one = make({"a b"});
  const InvertedIndex idx1(one);
  EXPECT_EQ(vocabulary(idx1, all_docs(1), 2, 1),
            (std::vector<NgramRecord>{{{"a"}, 1}, {{"a", "b"}, 1}, {{"b"}, 1}}));
  EXPECT_TRUE(vocabulary(idx, all_docs(2), 3, 3).empty());
}

TEST(Vocabulary, DfEqualsNaiveRecount) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    oracle::CorpusGen gen(seed, 5);
    const Corpus c = gen.corpus(150);
    const InvertedIndex idx(c);
    const auto universe = gen.subset(c.size());
    const std::size_t max_n = 1 + seed % 3;
    const std::size_t min_df = 1 + seed % 4;
    std::vector<NgramRecord> expected;
    for (const auto& [g, df] : oracle::naive_df(c, universe, max_n))
      if (df >= min_df) expected.push_back({g, df});
    ASSERT_EQ(vocabulary(idx, universe, max_n, min_df), expected);
  }
}
