#include <gtest/gtest.h>

#include <cmath>

#include "genredist/lexical_distance.hpp"
#include "test_util.hpp"

using namespace genredist;
using namespace genredist::testing;

namespace {

CorpusIndex small_corpus() {
  return CorpusIndex({volume("a1", 1900, {genre("A")}, {{"sea", 4}, {"ship", 2}, {"the", 10}}),
                      volume("a2", 1901, {genre("A")}, {{"sea", 1}, {"storm", 3}, {"the", 8}}),
                      volume("b1", 1900, {genre("B")}, {{"love", 5}, {"heart", 2}, {"the", 9}}),
                      volume("b2", 1902, {genre("B")}, {{"love", 2}, {"sea", 1}, {"the", 7}}),
                      volume("c1", 1903, {genre("C")}, {{"ship", 6}, {"sea", 2}, {"the", 11}})});
}

Sample sample_of(const CorpusIndex& index, const CategoryLabel& c) {
  const auto& ids = index.with_category(c);
  return Sample{c.str(), c, std::vector<std::string>(ids.begin(), ids.end()), 0, {}, {}};
}

}  // namespace

TEST(Idf, SmoothedFormula) {
  EXPECT_NEAR(idf(5, 5), std::log(6.0 / 6.0) + 1.0, 1e-15);
  EXPECT_NEAR(idf(5, 1), std::log(6.0 / 2.0) + 1.0, 1e-15);
  EXPECT_GT(idf(100, 0), idf(100, 1));
}

TEST(Vocabulary, TopKByDocumentFrequencyWithLexicalTies) {
  const auto index = small_corpus();
  const auto vocab = build_vocabulary(index, 3);
  ASSERT_EQ(vocab.size(), 3u);
  EXPECT_EQ(vocab[0], "the");
  EXPECT_EQ(vocab[1], "sea");
  EXPECT_EQ(vocab[2], "love");
  EXPECT_EQ(vocab.find("heart"), -1);
}

TEST(Tfidf, VectorIsSummedCountsTimesIdf) {
  const auto index = small_corpus();
  const auto vocab = build_vocabulary(index, 0);
  const auto v = genre_tfidf_vector(index, sample_of(index, genre("A")), vocab);
  const auto sea = static_cast<std::size_t>(vocab.find("sea"));
  EXPECT_NEAR(v.weights[sea], 5.0 * idf(5, 4), 1e-12);
  const auto love = static_cast<std::size_t>(vocab.find("love"));
  EXPECT_EQ(v.weights[love], 0.0);
}

TEST(Tfidf, MatrixProperties) {
  const auto index = small_corpus();
  const auto vocab = build_vocabulary(index, 0);
  const std::vector<Sample> samples = {sample_of(index, genre("A")), sample_of(index, genre("B")),
                                       sample_of(index, genre("C"))};
  const auto m = tfidf_distance_matrix(index, samples, vocab);
  EXPECT_EQ(m.method(), "tfidf");
  EXPECT_TRUE(m.is_symmetric());
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(m.at(i, i), 0.0);
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_GE(m.at(i, j), 0.0);
      EXPECT_LE(m.at(i, j), 1.0);
    }
  }
  // the sea-and-ship categories are closer to each other than to the love one
  EXPECT_LT(m.at(0, 2), m.at(0, 1));
}

TEST(Cosine, BasicsAndErrors) {
  EXPECT_NEAR(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0, 1e-15);
  EXPECT_NEAR(cosine_similarity(std::vector<double>{2, 2}, std::vector<double>{1, 1}), 1.0, 1e-15);
  EXPECT_THROW(cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 1}), Error);
  EXPECT_THROW(cosine_similarity(std::vector<double>{1}, std::vector<double>{1, 1}), Error);
  TermVector a{{1.0}, 1}, b{{1.0}, 2};
  EXPECT_THROW(cosine_similarity(a, b), Error);
}

TEST(Tfidf, EmptySampleRejected) {
  const auto index = small_corpus();
  const auto vocab = build_vocabulary(index, 0);
  EXPECT_THROW(genre_tfidf_vector(index, Sample{"x", std::nullopt, {}, 0, {}, {}}, vocab), Error);
}
