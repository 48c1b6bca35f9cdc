#include <gtest/gtest.h>

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "test_support.hpp"
#include "veritrace/errors.hpp"
#include "veritrace/traces.hpp"

using namespace veritrace;

namespace {

const TraceLexicon& shipped() {
  static const TraceLexicon lex = TraceLexicon::defaults();
  return lex;
}

bool has(const TraceResult& r, const std::string& phrase) {
  return std::find(r.matched_phrases.begin(), r.matched_phrases.end(), phrase) != r.matched_phrases.end();
}

}  // namespace

TEST(Detect, NotMh370QueryIsUnsupportive) {
  const auto r = detect("This image is NOT MH370, this is an image from the incident of a plane crashed in Sicily",
                        shipped());
  EXPECT_EQ(r.uns, 1);
  EXPECT_EQ(r.db, 0);
  EXPECT_TRUE(has(r, "not"));
}

TEST(Detect, IsThatPictureRealOrFake) {
  const auto r = detect("Is that picture real or fake?", shipped());
  EXPECT_EQ(r.db, 1);
  EXPECT_EQ(r.uns, 0);
  EXPECT_TRUE(has(r, "is that"));
  EXPECT_TRUE(has(r, "?"));
}

TEST(Detect, EmptyText) {
  const auto r = detect("", shipped());
  EXPECT_EQ(r.db, 0);
  EXPECT_EQ(r.uns, 0);
  EXPECT_TRUE(r.matched_phrases.empty());
}

TEST(Detect, MatchesOnlyAtTokenBoundaries) {
  EXPECT_EQ(detect("nothing to see, a notable scampi", shipped()).uns, 0);
  EXPECT_EQ(detect("total SCAM.", shipped()).uns, 1);
  EXPECT_EQ(detect("is thatcher here", shipped()).db, 0);
  EXPECT_EQ(detect("IS   THAT\tyou", shipped()).db, 1);
}

TEST(Detect, QuestionMarkToggle) {
  TraceLexicon lex = shipped();
  lex.question_mark_is_doubt = false;
  EXPECT_EQ(detect("really?", lex).db, 0);
  EXPECT_EQ(detect("really?", shipped()).db, 1);
}

TEST(Detect, MatchesListedInFirstOccurrenceOrder) {
  const auto r = detect("Hoax? It is a scam, a hoax, and fake news", shipped());
  ASSERT_GE(r.matched_phrases.size(), 4u);
  EXPECT_EQ(r.matched_phrases[0], "hoax");
  EXPECT_EQ(std::count(r.matched_phrases.begin(), r.matched_phrases.end(), "hoax"), 1);
  EXPECT_TRUE(has(r, "fake news"));
}

TEST(Detect, CaseInvariance) {
  const std::vector<std::string> samples{"Is That a HOAX?", "not sure about this", "Beware of MALWARE",
                                         "nothing here", "Fake News everywhere"};
  for (const auto& s : samples) {
    std::string lower = s, upper = s;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    const auto a = detect(s, shipped()), b = detect(lower, shipped()), c = detect(upper, shipped());
    EXPECT_EQ(a.db, b.db);
    EXPECT_EQ(a.uns, b.uns);
    EXPECT_EQ(a.matched_phrases, c.matched_phrases);
  }
}

TEST(Detect, EveryShippedPhraseFiresInContext) {
  for (const auto& p : shipped().doubt_phrases) {
    const auto r = detect("x " + p + " y", shipped());
    EXPECT_EQ(r.db, 1) << p;
    EXPECT_TRUE(has(r, p)) << p;
  }
  for (const auto& p : shipped().fake_phrases) {
    const auto r = detect("x " + p + " y", shipped());
    EXPECT_EQ(r.uns, 1) << p;
    EXPECT_TRUE(has(r, p)) << p;
  }
}

TEST(Detect, StrippingPhrasesSilencesDetector) {
  const auto& lex = shipped();
  std::set<std::string> phrase_words;
  for (const auto* list : {&lex.doubt_phrases, &lex.fake_phrases})
    for (const auto& p : *list)
      for (const auto& w : word_tokens(p)) phrase_words.insert(w);
  const std::vector<std::string> texts{"Is that real? Not sure, looks like a hoax",
                                       "Beware: scam, not true, fake news!", "plain statement"};
  for (const auto& text : texts) {
    std::string stripped;
    for (const auto& tok : word_tokens(text))
      if (!phrase_words.count(tok)) stripped += tok + " ";
    const auto r = detect(stripped, lex);
    EXPECT_EQ(r.db, 0) << stripped;
    EXPECT_EQ(r.uns, 0) << stripped;
  }
}

TEST(Lexicon, ShippedFilesMatchCompiledDefaults) {
  const auto dir = testutil::data_dir() / "lexicon";
  const auto loaded = TraceLexicon::load(dir / "doubt.lex", dir / "fake.lex");
  EXPECT_EQ(loaded.doubt_phrases, shipped().doubt_phrases);
  EXPECT_EQ(loaded.fake_phrases, shipped().fake_phrases);
  EXPECT_EQ(shipped().doubt_phrases, (std::vector<std::string>{"is it", "is that", "not sure"}));
  for (const char* p : {"malware", "beware", "scam", "fishy"})
    EXPECT_NE(std::find(shipped().fake_phrases.begin(), shipped().fake_phrases.end(), p),
              shipped().fake_phrases.end());
}

TEST(Lexicon, ReaderNormalizesAndRejectsPunctuation) {
  std::istringstream ok("# header\n  Not   SURE \n\nHoax\n");
  EXPECT_EQ(read_lexicon(ok), (std::vector<std::string>{"not sure", "hoax"}));
  std::istringstream bad("is-it\n");
  EXPECT_THROW(read_lexicon(bad), InputError);
}

TEST(WordTokens, SplitsOnNonWordBytes) {
  EXPECT_EQ(word_tokens("It's NOT MH370!"), (std::vector<std::string>{"it", "s", "not", "mh370"}));
}

TEST(UncertaintyScore, SumOverAllPairs) {
  for (int a : {0, 1})
    for (int b : {0, 1}) {
      EXPECT_EQ(uncertainty_score(a, b), a + b);
      EXPECT_EQ(uncertainty_score(a, b, UncertaintyMode::saturating_or), a | b);
    }
  EXPECT_EQ(uncertainty_score(1, 1), 2);
  EXPECT_THROW(uncertainty_score(2, 0), std::invalid_argument);
  EXPECT_THROW(uncertainty_score(0, -1), std::invalid_argument);
}
