#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "veritrace/corpus.hpp"
#include "veritrace/evidence.hpp"
#include "veritrace/similarity.hpp"
#include "veritrace/traces.hpp"

namespace veritrace {

inline constexpr std::size_t kFeatureCount = 5;
/// Column order in every feature file and model.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "uns_query", "uns_titles", "db_query", "db_titles", "s"};

struct FeatureVector {
  double uns_query = 0.0;   // 0/1
  double uns_titles = 0.0;  // [0,1]
  double db_query = 0.0;    // 0/1
  double db_titles = 0.0;   // [0,1]
  double s = 0.0;           // [0,5], strongest title similarity

  std::array<double, kFeatureCount> values() const {
    return {uns_query, uns_titles, db_query, db_titles, s};
  }
  static FeatureVector from_values(const std::array<double, kFeatureCount>& v) {
    return {v[0], v[1], v[2], v[3], v[4]};
  }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// How title-level trace flags reduce to one feature: the fraction of titles
/// that fire, or 1 if any title fires.
enum class TitleTraceReduce { fraction, any };
TitleTraceReduce parse_title_trace_reduce(std::string_view s);

struct FeatureContext {
  const EvidenceStore& store;
  Engine engine;
  const SimilarityScorer& scorer;
  const TraceMatcher& matcher;
  Threshold threshold{};
  std::size_t k = kMaxTitles;
  TitleTraceReduce reduce = TitleTraceReduce::fraction;
};

struct FeaturizedPost {
  FeatureVector features;
  bool low_evidence = false;  // no titles for this image/engine
  TraceResult query_traces;
  PostSimilaritySummary similarity;
};

/// Throws std::invalid_argument for non-image posts. Scorer errors propagate.
FeaturizedPost featurize(const Post& post, const FeatureContext& ctx);

struct FeatureTable {
  std::vector<std::string> post_ids;
  std::vector<FeatureVector> rows;
  std::vector<int> labels;
  std::vector<bool> low_evidence;

  std::size_t size() const { return rows.size(); }
  friend bool operator==(const FeatureTable&, const FeatureTable&) = default;
};

/// One row per post in corpus order. A post whose featurization throws is
/// skipped with a diagnostic (line = 1-based corpus position). `threads` > 1
/// splits the work without changing row order.
FeatureTable featurize_corpus(const Corpus& corpus, const FeatureContext& ctx,
                              std::vector<Diagnostic>* diagnostics = nullptr,
                              unsigned threads = 1);

/// CSV with header post_id,uns_query,uns_titles,db_query,db_titles,s,label and
/// values printed with at most 9 significant digits.
void write_feature_csv(const FeatureTable& table, std::ostream& out);
FeatureTable read_feature_csv(std::istream& in);

}  // namespace veritrace
