#include <gtest/gtest.h>

#include <sstream>

#include "test_support.hpp"
#include "veritrace/config.hpp"
#include "veritrace/errors.hpp"

using namespace veritrace;

namespace {

ConfigDoc parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

RunConfig resolve(const std::string& text, const std::filesystem::path& base = "/base") {
  return resolve_config(parse(text), base);
}

}  // namespace

TEST(ParseConfig, TablesValuesAndComments) {
  const auto doc = parse(
      "# top comment\n"
      "seed = 11\n"
      "[split]\n"
      "train = 0.6  # trailing comment\n"
      "unit = \"image\"\n"
      "[classifiers]\n"
      "models = [\"knn\", 'random_forest']\n"
      "standardize = false\n"
      "[paths]\n"
      "corpus = \"dir with # hash/c.tsv\"\n");
  EXPECT_EQ(std::get<std::int64_t>(doc.at("seed").v), 11);
  EXPECT_DOUBLE_EQ(std::get<double>(doc.at("split.train").v), 0.6);
  EXPECT_EQ(std::get<std::string>(doc.at("split.unit").v), "image");
  EXPECT_EQ(std::get<bool>(doc.at("classifiers.standardize").v), false);
  EXPECT_EQ(std::get<ConfigArray>(doc.at("classifiers.models").v).size(), 2u);
  EXPECT_EQ(std::get<std::string>(doc.at("paths.corpus").v), "dir with # hash/c.tsv");
}

TEST(ParseConfig, ErrorsNameTheLine) {
  try {
    parse("seed = 1\n\nthis is not toml\n");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse("a = \"unterminated\n"), InputError);
  EXPECT_THROW(parse("a = 1\na = 2\n"), InputError);
  EXPECT_THROW(parse("[broken\n"), InputError);
}

TEST(ResolveConfig, DefaultsAndSeedPropagation) {
  const auto cfg = resolve("seed = 9\n");
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.split.seed, 9u);
  EXPECT_EQ(cfg.neural.seed, 9u);
  EXPECT_DOUBLE_EQ(cfg.threshold, 1.3);
  EXPECT_EQ(cfg.k, 10u);
  EXPECT_EQ(cfg.neural.epochs, 25u);
  EXPECT_EQ(cfg.mode, InputMode::tweet_plus_image);
  const auto split_own = resolve("seed = 9\n[split]\nseed = 3\n");
  EXPECT_EQ(split_own.split.seed, 3u);
}

TEST(ResolveConfig, RelativePathsUseBaseDir) {
  const auto cfg = resolve("[paths]\ncorpus = \"c.tsv\"\nevidence = \"/abs/e.jsonl\"\n", "/data/run");
  EXPECT_EQ(cfg.paths.corpus, std::filesystem::path("/data/run/c.tsv"));
  EXPECT_EQ(cfg.paths.evidence, std::filesystem::path("/abs/e.jsonl"));
  EXPECT_EQ(cfg.paths.output_dir, std::filesystem::path("/data/run/out"));
}

TEST(ResolveConfig, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(resolve("[split]\ntrian = 0.7\n"), InputError);
  EXPECT_THROW(resolve("[similarity]\nthreshold = 7.0\n"), InputError);
  EXPECT_THROW(resolve("[evidence]\nengine = \"yahoo\"\n"), InputError);
  EXPECT_THROW(resolve("[evidence]\nk = 0\n"), InputError);
  EXPECT_THROW(resolve("[split]\ntrain = 0.9\n"), InputError);
  EXPECT_THROW(resolve("[classifiers]\nmodels = [\"xgboost\"]\n"), InputError);
  EXPECT_THROW(resolve("seed = \"seven\"\n"), InputError);
}

TEST(ResolveConfig, OverridesReachEveryModule) {
  const auto cfg = resolve(
      "[evidence]\nengine = \"google_images\"\nk = 4\n"
      "[similarity]\nscorer = \"external_file\"\nmissing_pair = \"fallback_builtin\"\nthreshold = 2.0\n"
      "[features]\ntitle_trace_reduce = \"any\"\n"
      "[classifiers]\nmodels = [\"bilstm\", \"rf\"]\nrf_trees = 12\nknn_k = 3\n"
      "[neural]\nmode = \"A\"\nvote = \"majority\"\nhidden = 8\nmin_freq = 2\n");
  EXPECT_EQ(cfg.engine, Engine::google_images);
  EXPECT_EQ(cfg.k, 4u);
  EXPECT_EQ(cfg.scorer, ScorerKind::external_file);
  EXPECT_EQ(cfg.missing_pair, MissingPairPolicy::fallback_builtin);
  EXPECT_DOUBLE_EQ(cfg.threshold, 2.0);
  EXPECT_EQ(cfg.title_trace_reduce, TitleTraceReduce::any);
  EXPECT_EQ(cfg.hyper.rf_trees, 12u);
  EXPECT_EQ(cfg.hyper.knn_k, 3u);
  EXPECT_EQ(cfg.mode, InputMode::image_only);
  EXPECT_EQ(cfg.vote, VoteRule::majority);
  EXPECT_EQ(cfg.neural.hidden, 8u);
  EXPECT_EQ(cfg.vocab_min_freq, 2);
}

TEST(RenderConfig, IsAFixpointOfResolve) {
  const auto cfg = resolve_config(load_config_file(testutil::fixture("demo/veritrace.toml")),
                                  testutil::fixture("demo"));
  const std::string once = render_config(cfg);
  const auto again = resolve("" + once, "/elsewhere");
  EXPECT_EQ(render_config(again), once);
}
