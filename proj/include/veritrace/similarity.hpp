#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "veritrace/errors.hpp"
#include "veritrace/traces.hpp"

namespace veritrace {

inline constexpr double kMaxSimilarity = 5.0;

enum class ScorerKind { lexical_builtin, external_file };
std::string_view to_string(ScorerKind kind);
ScorerKind parse_scorer_kind(std::string_view s);

/// Scores a (query, title) pair on [0, 5]. Implementations are immutable
/// after construction.
class SimilarityScorer {
 public:
  virtual ~SimilarityScorer() = default;
  virtual ScorerKind kind() const = 0;
  /// 0 when either side is empty after text normalization.
  virtual double score(std::string_view query, std::string_view title) const = 0;
};

/// 5 x cosine of the stemmed-token count vectors.
class LexicalScorer final : public SimilarityScorer {
 public:
  ScorerKind kind() const override { return ScorerKind::lexical_builtin; }
  double score(std::string_view query, std::string_view title) const override;
};

enum class MissingPairPolicy { error, fallback_builtin };

class MissingScoreError : public InputError {
 public:
  using InputError::InputError;
};

/// Precomputed pair scores keyed by (sha256(query), sha256(title)) over the
/// exact UTF-8 bytes. File rows: `query_sha256 \t title_sha256 \t score`.
class ExternalScoresScorer final : public SimilarityScorer {
 public:
  explicit ExternalScoresScorer(MissingPairPolicy policy = MissingPairPolicy::error)
      : policy_(policy) {}

  static ExternalScoresScorer read(std::istream& in, MissingPairPolicy policy);
  static ExternalScoresScorer load(const std::filesystem::path& path, MissingPairPolicy policy);

  /// Adds or replaces a pair keyed by the hashes of the given strings.
  void insert(std::string_view query, std::string_view title, double score);
  void insert_hashed(std::string query_sha256, std::string title_sha256, double score);
  void write(std::ostream& out) const;
  std::size_t size() const { return scores_.size(); }

  ScorerKind kind() const override { return ScorerKind::external_file; }
  double score(std::string_view query, std::string_view title) const override;

 private:
  MissingPairPolicy policy_;
  std::map<std::pair<std::string, std::string>, double> scores_;
  LexicalScorer fallback_;
};

/// Outcome for one (query, title) pair.
enum class SimilarityCase {
  context_mismatch,
  query_fake_only,
  title_fake_only,
  both_fake,
  no_fake_signal,
};
std::string_view to_string(SimilarityCase c);

class Threshold {
 public:
  static constexpr double kDefault = 1.3;
  Threshold() = default;
  /// Throws std::invalid_argument outside [0, 5].
  explicit Threshold(double value);
  double value() const { return value_; }

 private:
  double value_ = kDefault;
};

/// Scores below the threshold are a context mismatch whatever the flags;
/// at or above it the two fake flags pick the case.
SimilarityCase classify_case(double s, int query_uns, int title_uns, Threshold threshold = {});

struct TitleAssessment {
  std::string title;
  double score = 0.0;
  TraceResult traces;
  SimilarityCase outcome = SimilarityCase::context_mismatch;
};

struct PostSimilaritySummary {
  double s_max = 0.0;
  double s_mean = 0.0;
  double title_uns_frac = 0.0;
  double title_db_frac = 0.0;
  std::vector<SimilarityCase> cases;
  std::vector<TitleAssessment> titles;  // same order as the input titles
};

PostSimilaritySummary aggregate_post(const SimilarityScorer& scorer, std::string_view query,
                                     std::span<const std::string> titles,
                                     const TraceMatcher& matcher, Threshold threshold = {});

}  // namespace veritrace
