#include <gtest/gtest.h>

#include <sstream>

#include "test_support.hpp"
#include "veritrace/features.hpp"

using namespace veritrace;

namespace {

const std::string kQuery =
    "This image is NOT MH370, this is an image from the incident of a plane crashed in Sicily on "
    "6Ogos2005 #PrayForMH370";
const std::string kSerious = "Serious! - Pictures of MH370 Crashed at Sea This Is Fake UPDATES";

Post post(std::string id, std::string text, std::string image, Label label = Label::fake) {
  Post p;
  p.post_id = std::move(id);
  p.text = std::move(text);
  p.image_id = std::move(image);
  p.event = "ev";
  p.label = label;
  return p;
}

TraceLexicon mh370_lexicon() {
  TraceLexicon lex = TraceLexicon::defaults();
  lex.fake_phrases = load_lexicon(testutil::fixture("mh370/fake.lex"));
  return lex;
}

}  // namespace

TEST(Featurize, Mh370SingleTitle) {
  EvidenceStore store;
  store.upsert(EvidenceRecord{"img", Engine::bing_visual, {kSerious}, {}});
  ExternalScoresScorer scorer;
  scorer.insert(kQuery, kSerious, 2.125);
  const TraceMatcher matcher(mh370_lexicon());
  const FeatureContext ctx{store, Engine::bing_visual, scorer, matcher};
  const auto f = featurize(post("p", kQuery, "img"), ctx);
  EXPECT_EQ(f.features.uns_query, 1.0);
  EXPECT_EQ(f.features.uns_titles, 1.0);
  EXPECT_EQ(f.features.s, 2.125);
  EXPECT_FALSE(f.low_evidence);
}

TEST(Featurize, NoEvidenceDefaults) {
  EvidenceStore store;
  const LexicalScorer scorer;
  const TraceMatcher matcher(TraceLexicon::defaults());
  const FeatureContext ctx{store, Engine::bing_visual, scorer, matcher};
  const auto f = featurize(post("p", "Is it a hoax?", "missing"), ctx);
  EXPECT_EQ(f.features, (FeatureVector{1.0, 0.0, 1.0, 0.0, 0.0}));
  EXPECT_TRUE(f.low_evidence);
}

TEST(Featurize, VideoPostRejected) {
  EvidenceStore store;
  const LexicalScorer scorer;
  const TraceMatcher matcher(TraceLexicon::defaults());
  const FeatureContext ctx{store, Engine::bing_visual, scorer, matcher};
  Post p = post("v", "clip", "vid");
  p.media_kind = MediaKind::video;
  EXPECT_THROW(featurize(p, ctx), std::invalid_argument);
}

TEST(Featurize, KLimitsTitlesAndAnyReduce) {
  EvidenceStore store;
  store.upsert(EvidenceRecord{"img", Engine::fixture, {"plain one", "plain two", "a hoax", "a scam"}, {}});
  const LexicalScorer scorer;
  const TraceMatcher matcher(TraceLexicon::defaults());
  FeatureContext ctx{store, Engine::fixture, scorer, matcher};
  ctx.k = 2;
  EXPECT_EQ(featurize(post("p", "plain", "img"), ctx).features.uns_titles, 0.0);
  ctx.k = 4;
  EXPECT_DOUBLE_EQ(featurize(post("p", "plain", "img"), ctx).features.uns_titles, 0.5);
  ctx.reduce = TitleTraceReduce::any;
  EXPECT_DOUBLE_EQ(featurize(post("p", "plain", "img"), ctx).features.uns_titles, 1.0);
}

TEST(Featurize, RangesHoldOnDemoFixture) {
  const auto corpus = load_corpus(testutil::fixture("demo/corpus.tsv"), CorpusFormat::vmu_tsv).corpus;
  const auto store = load_store(testutil::fixture("demo/evidence.jsonl"));
  const auto scorer = ExternalScoresScorer::load(testutil::fixture("demo/scores.tsv"), MissingPairPolicy::error);
  const TraceMatcher matcher(TraceLexicon::defaults());
  const FeatureContext ctx{store, Engine::bing_visual, scorer, matcher};
  std::vector<Diagnostic> diags;
  const auto table = featurize_corpus(corpus, ctx, &diags);
  EXPECT_TRUE(diags.empty());
  ASSERT_EQ(table.size(), corpus.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& f = table.rows[i];
    EXPECT_TRUE(f.uns_query == 0.0 || f.uns_query == 1.0);
    EXPECT_TRUE(f.db_query == 0.0 || f.db_query == 1.0);
    EXPECT_GE(f.uns_titles, 0.0);
    EXPECT_LE(f.uns_titles, 1.0);
    EXPECT_GE(f.db_titles, 0.0);
    EXPECT_LE(f.db_titles, 1.0);
    EXPECT_GE(f.s, 0.0);
    EXPECT_LE(f.s, 5.0);
    EXPECT_EQ(table.post_ids[i], corpus.posts()[i].post_id);
  }
}

TEST(FeaturizeCorpus, ThreadCountDoesNotChangeOutput) {
  const auto corpus = load_corpus(testutil::fixture("demo/corpus.tsv"), CorpusFormat::vmu_tsv).corpus;
  const auto store = load_store(testutil::fixture("demo/evidence.jsonl"));
  const LexicalScorer scorer;
  const TraceMatcher matcher(TraceLexicon::defaults());
  const FeatureContext ctx{store, Engine::bing_visual, scorer, matcher};
  const auto one = featurize_corpus(corpus, ctx, nullptr, 1);
  EXPECT_EQ(featurize_corpus(corpus, ctx, nullptr, 3), one);
  EXPECT_EQ(featurize_corpus(corpus, ctx, nullptr, 8), one);
}

TEST(FeaturizeCorpus, ScorerFailureSkipsPostWithDiagnostic) {
  Corpus corpus;
  corpus.add(post("a", "known", "img"));
  corpus.add(post("b", "unknown", "img"));
  EvidenceStore store;
  store.upsert(EvidenceRecord{"img", Engine::fixture, {"title"}, {}});
  ExternalScoresScorer scorer;
  scorer.insert("known", "title", 3.0);
  const TraceMatcher matcher(TraceLexicon::defaults());
  const FeatureContext ctx{store, Engine::fixture, scorer, matcher};
  std::vector<Diagnostic> diags;
  const auto table = featurize_corpus(corpus, ctx, &diags);
  ASSERT_EQ(table.size(), 1u);
  EXPECT_EQ(table.post_ids[0], "a");
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_EQ(diags[0].line, 2u);
}

TEST(FeatureCsv, RoundTripAndHeader) {
  FeatureTable t;
  t.post_ids = {"x", "y"};
  t.rows = {FeatureVector{1, 0.3, 0, 0.1, 2.125}, FeatureVector{0, 1.0 / 3.0, 1, 0, 4.999}};
  t.labels = {1, 0};
  t.low_evidence = {false, false};
  std::stringstream buf;
  write_feature_csv(t, buf);
  const std::string text = buf.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "post_id,uns_query,uns_titles,db_query,db_titles,s,label");
  const auto back = read_feature_csv(buf);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.post_ids, t.post_ids);
  EXPECT_EQ(back.labels, t.labels);
  EXPECT_NEAR(back.rows[1].uns_titles, 1.0 / 3.0, 1e-9);
  EXPECT_EQ(back.rows[0].s, 2.125);
}
