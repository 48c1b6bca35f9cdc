#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "test_support.hpp"
#include "veritrace/hashing.hpp"
#include "veritrace/similarity.hpp"
#include "veritrace/textprep.hpp"

using namespace veritrace;

namespace {

const std::string kQuery =
    "This image is NOT MH370, this is an image from the incident of a plane crashed in Sicily on "
    "6Ogos2005 #PrayForMH370";
const std::string kAtr = "Atr72 air disaster, Bari remembers 16 victims";
const std::string kSerious = "Serious! - Pictures of MH370 Crashed at Sea This Is Fake UPDATES";

// Cosine over stemmed token counts, computed independently of the scorer.
double cosine_oracle(const std::string& a, const std::string& b) {
  std::map<std::string, double> ca, cb;
  for (const auto& t : normalize(a).tokens) ca[t] += 1;
  for (const auto& t : normalize(b).tokens) cb[t] += 1;
  if (ca.empty() || cb.empty()) return 0.0;
  double dot = 0, na = 0, nb = 0;
  for (const auto& [t, v] : ca) {
    na += v * v;
    if (auto it = cb.find(t); it != cb.end()) dot += v * it->second;
  }
  for (const auto& [t, v] : cb) nb += v * v;
  return 5.0 * dot / std::sqrt(na * nb);
}

ExternalScoresScorer mh370_scores(MissingPairPolicy policy = MissingPairPolicy::error) {
  return ExternalScoresScorer::load(testutil::fixture("mh370/scores.tsv"), policy);
}

}  // namespace

TEST(LexicalScorer, IdenticalTextScoresFive) {
  const LexicalScorer s;
  for (const char* x : {"shark in the street", "Boston marathon suspects", kQuery.c_str()})
    EXPECT_NEAR(s.score(x, x), 5.0, 1e-12);
}

TEST(LexicalScorer, EmptyAfterNormalizationScoresZero) {
  const LexicalScorer s;
  EXPECT_EQ(s.score("", "shark"), 0.0);
  EXPECT_EQ(s.score("the of and", "shark"), 0.0);
  EXPECT_EQ(s.score("shark", "??"), 0.0);
}

TEST(LexicalScorer, MatchesCosineOracle) {
  const LexicalScorer s;
  const std::vector<std::string> texts{
      kQuery, kAtr, kSerious, "Shark swimming down the street in New Jersey",
      "Super Storm Sandy Sharks swimming down New Jersey street.",
      "Hurricane Irene: 'Photo' of shark swimming in street is fake Shark .",
      "FBI releases photos of the Boston Marathon bombing suspects", "unrelated words entirely"};
  for (const auto& a : texts)
    for (const auto& b : texts) {
      const double got = s.score(a, b);
      EXPECT_NEAR(got, cosine_oracle(a, b), 1e-12) << a << " | " << b;
      EXPECT_GE(got, 0.0);
      EXPECT_LE(got, 5.0);
      EXPECT_DOUBLE_EQ(got, s.score(b, a));
    }
}

TEST(ExternalScores, Mh370PairsLoadFromFixture) {
  const auto scorer = mh370_scores();
  EXPECT_EQ(scorer.size(), 3u);
  EXPECT_DOUBLE_EQ(scorer.score(kQuery, kAtr), 1.03);
  EXPECT_DOUBLE_EQ(scorer.score(kQuery, kSerious), 2.125);
}

TEST(ExternalScores, KeysAreExactBytes) {
  ExternalScoresScorer s;
  s.insert("abc", "def", 4.0);
  EXPECT_DOUBLE_EQ(s.score("abc", "def"), 4.0);
  EXPECT_THROW(s.score("abc ", "def"), MissingScoreError);
  EXPECT_THROW(s.score("ABC", "def"), MissingScoreError);
}

TEST(ExternalScores, MissingPairPolicy) {
  const auto strict = mh370_scores();
  try {
    strict.score("new query", kAtr);
    FAIL();
  } catch (const MissingScoreError& e) {
    EXPECT_NE(std::string(e.what()).find(sha256_hex("new query")), std::string::npos);
  }
  const auto lenient = mh370_scores(MissingPairPolicy::fallback_builtin);
  EXPECT_DOUBLE_EQ(lenient.score("shark street", "shark street"), 5.0);
}

TEST(ExternalScores, RejectsBadRowsAndRoundTrips) {
  std::istringstream out_of_range(sha256_hex("a") + "\t" + sha256_hex("b") + "\t7.5\n");
  EXPECT_THROW(ExternalScoresScorer::read(out_of_range, MissingPairPolicy::error), InputError);
  std::istringstream short_hash("abc\t" + sha256_hex("b") + "\t1\n");
  EXPECT_THROW(ExternalScoresScorer::read(short_hash, MissingPairPolicy::error), InputError);

  const auto scorer = mh370_scores();
  std::stringstream buf;
  scorer.write(buf);
  const auto back = ExternalScoresScorer::read(buf, MissingPairPolicy::error);
  EXPECT_EQ(back.size(), scorer.size());
  EXPECT_DOUBLE_EQ(back.score(kQuery, kSerious), 2.125);
}

TEST(ClassifyCase, WorkedPairs) {
  EXPECT_EQ(classify_case(1.03, 1, 0), SimilarityCase::context_mismatch);
  EXPECT_EQ(classify_case(2.125, 1, 1), SimilarityCase::both_fake);
  EXPECT_EQ(classify_case(1.3, 0, 0), SimilarityCase::no_fake_signal);
  EXPECT_EQ(classify_case(std::nextafter(1.3, 0.0), 1, 1), SimilarityCase::context_mismatch);
}

TEST(ClassifyCase, FullTruthTable) {
  const std::pair<std::pair<int, int>, SimilarityCase> table[] = {
      {{1, 0}, SimilarityCase::query_fake_only},
      {{0, 1}, SimilarityCase::title_fake_only},
      {{1, 1}, SimilarityCase::both_fake},
      {{0, 0}, SimilarityCase::no_fake_signal}};
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int i = 0; i < 500; ++i) {
    const double t = u(gen), s = u(gen);
    for (const auto& [flags, expected] : table) {
      const auto got = classify_case(s, flags.first, flags.second, Threshold(t));
      EXPECT_EQ(got, s < t ? SimilarityCase::context_mismatch : expected);
    }
  }
}

TEST(ClassifyCase, ThresholdRangeChecked) {
  EXPECT_THROW(Threshold(-0.1), std::invalid_argument);
  EXPECT_THROW(Threshold(5.1), std::invalid_argument);
  EXPECT_DOUBLE_EQ(Threshold().value(), 1.3);
}

TEST(AggregatePost, IdenticalTitle) {
  const LexicalScorer lex;
  const TraceMatcher matcher(TraceLexicon::defaults());
  const std::vector<std::string> titles{"shark swimming in the street"};
  const auto s = aggregate_post(lex, "shark swimming in the street", titles, matcher);
  EXPECT_NEAR(s.s_max, 5.0, 1e-12);
  ASSERT_EQ(s.cases.size(), 1u);
  EXPECT_EQ(s.cases[0], SimilarityCase::no_fake_signal);
}

TEST(AggregatePost, EmptyTitles) {
  const LexicalScorer lex;
  const TraceMatcher matcher(TraceLexicon::defaults());
  const auto s = aggregate_post(lex, "anything", {}, matcher);
  EXPECT_EQ(s.s_max, 0.0);
  EXPECT_EQ(s.s_mean, 0.0);
  EXPECT_EQ(s.title_uns_frac, 0.0);
  EXPECT_EQ(s.title_db_frac, 0.0);
  EXPECT_TRUE(s.cases.empty());
}

TEST(AggregatePost, FractionsCountFiringTitles) {
  const LexicalScorer lex;
  const TraceMatcher matcher(TraceLexicon::defaults());
  std::vector<std::string> titles;
  for (int i = 0; i < 7; ++i) titles.push_back("storm photo number " + std::to_string(i));
  titles.push_back("this is a hoax");
  titles.push_back("beware of scam photo");
  titles.push_back("misleading picture, is it real?");
  const auto s = aggregate_post(lex, "storm photo", titles, matcher);
  EXPECT_DOUBLE_EQ(s.title_uns_frac, 0.3);
  EXPECT_DOUBLE_EQ(s.title_db_frac, 0.1);
  double mx = 0, sum = 0;
  for (const auto& t : s.titles) {
    mx = std::max(mx, t.score);
    sum += t.score;
  }
  EXPECT_DOUBLE_EQ(s.s_max, mx);
  EXPECT_DOUBLE_EQ(s.s_mean, sum / 10.0);
  EXPECT_EQ(s.titles.size(), titles.size());
}

TEST(AggregatePost, Mh370WorkedExampleWithExternalScores) {
  const auto scorer = mh370_scores();
  TraceLexicon lexicon = TraceLexicon::defaults();
  lexicon.fake_phrases = load_lexicon(testutil::fixture("mh370/fake.lex"));
  const TraceMatcher matcher(lexicon);
  const std::vector<std::string> titles{kAtr, kSerious};
  const auto s = aggregate_post(scorer, kQuery, titles, matcher);
  ASSERT_EQ(s.cases.size(), 2u);
  EXPECT_EQ(s.cases[0], SimilarityCase::context_mismatch);
  EXPECT_EQ(s.cases[1], SimilarityCase::both_fake);
  EXPECT_DOUBLE_EQ(s.s_max, 2.125);
  EXPECT_DOUBLE_EQ(s.title_uns_frac, 0.5);
}
