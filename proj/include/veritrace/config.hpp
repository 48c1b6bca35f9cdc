#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "veritrace/classifiers.hpp"
#include "veritrace/corpus.hpp"
#include "veritrace/evidence.hpp"
#include "veritrace/features.hpp"
#include "veritrace/neural.hpp"
#include "veritrace/similarity.hpp"

namespace veritrace {

/// A value in the TOML subset understood here: strings, integers, floats,
/// booleans and flat arrays of those.
struct ConfigValue;
using ConfigArray = std::vector<ConfigValue>;
struct ConfigValue {
  std::variant<std::string, std::int64_t, double, bool, ConfigArray> v;
};

/// Keys are dotted paths ("split.train"). Supports `[table]` headers,
/// `key = value` lines, `#` comments, basic and literal strings.
/// Throws InputError with the offending line number.
using ConfigDoc = std::map<std::string, ConfigValue, std::less<>>;
ConfigDoc parse_config(std::istream& in);
ConfigDoc load_config_file(const std::filesystem::path& path);

struct RunPaths {
  std::filesystem::path corpus;
  CorpusFormat corpus_format = CorpusFormat::vmu_tsv;
  std::filesystem::path evidence;
  std::filesystem::path scores;      // empty: none
  std::filesystem::path doubt_lexicon;  // empty: shipped default
  std::filesystem::path fake_lexicon;   // empty: shipped default
  std::filesystem::path replay_dir;
  std::filesystem::path output_dir = "out";
};

struct RunConfig {
  std::uint64_t seed = 7;
  RunPaths paths;
  Engine engine = Engine::bing_visual;
  std::size_t k = kMaxTitles;
  ScorerKind scorer = ScorerKind::lexical_builtin;
  MissingPairPolicy missing_pair = MissingPairPolicy::error;
  double threshold = Threshold::kDefault;
  TitleTraceReduce title_trace_reduce = TitleTraceReduce::fraction;
  unsigned threads = 1;
  SplitSpec split;
  SplitUnit split_unit = SplitUnit::post;
  std::vector<std::string> models = {"random_forest", "logreg", "linear_svm", "naive_bayes", "knn"};
  Hyperparameters hyper;
  NeuralConfig neural;
  int vocab_min_freq = 1;
  InputMode mode = InputMode::tweet_plus_image;
  VoteRule vote = VoteRule::mean_prob;
  // evidence fetching
  std::chrono::seconds ttl = std::chrono::hours(24 * 30);
  int max_attempts = 3;
  double requests_per_second = 1.0;
};

/// Builds a RunConfig from a parsed document. Relative paths resolve against
/// `base_dir`. Unknown keys are rejected so typos do not pass silently.
RunConfig resolve_config(const ConfigDoc& doc, const std::filesystem::path& base_dir);

/// Deterministic TOML rendering of every effective setting.
std::string render_config(const RunConfig& config);

}  // namespace veritrace
