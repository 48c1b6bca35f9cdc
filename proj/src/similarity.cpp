#include "veritrace/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "veritrace/hashing.hpp"
#include "veritrace/strings.hpp"
#include "veritrace/textprep.hpp"

namespace veritrace {

std::string_view to_string(ScorerKind kind) {
  return kind == ScorerKind::lexical_builtin ? "lexical_builtin" : "external_file";
}

ScorerKind parse_scorer_kind(std::string_view s) {
  if (s == "lexical_builtin" || s == "lexical") return ScorerKind::lexical_builtin;
  if (s == "external_file" || s == "external") return ScorerKind::external_file;
  throw InputError("unknown scorer kind '" + std::string(s) + "'");
}

double LexicalScorer::score(std::string_view query, std::string_view title) const {
  const auto a = normalize(query);
  const auto b = normalize(title);
  if (a.empty() || b.empty()) return 0.0;
  std::map<std::string_view, std::pair<long long, long long>> counts;
  for (const auto& t : a.tokens) ++counts[t].first;
  for (const auto& t : b.tokens) ++counts[t].second;
  long long dot = 0, na = 0, nb = 0;
  for (const auto& [token, c] : counts) {
    dot += c.first * c.second;
    na += c.first * c.first;
    nb += c.second * c.second;
  }
  // Integer products keep score(x, x) exactly 5: sqrt(n*n) == n.
  const double cosine = static_cast<double>(dot) /
                        std::sqrt(static_cast<double>(na) * static_cast<double>(nb));
  return std::clamp(kMaxSimilarity * cosine, 0.0, kMaxSimilarity);
}

ExternalScoresScorer ExternalScoresScorer::read(std::istream& in, MissingPairPolicy policy) {
  ExternalScoresScorer scorer(policy);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (strings::trim(line).empty() || line.starts_with("query_sha256") || line.front() == '#') {
      continue;
    }
    const auto cells = strings::split(line, '\t');
    if (cells.size() != 3 || cells[0].size() != 64 || cells[1].size() != 64) {
      throw InputError("scores file line " + std::to_string(line_no) +
                       ": expected query_sha256<TAB>title_sha256<TAB>score");
    }
    const double s = strings::parse_double(cells[2], "score");
    if (!(s >= 0.0 && s <= kMaxSimilarity)) {
      throw InputError("scores file line " + std::to_string(line_no) + ": score outside [0,5]");
    }
    scorer.insert_hashed(cells[0], cells[1], s);
  }
  return scorer;
}

ExternalScoresScorer ExternalScoresScorer::load(const std::filesystem::path& path,
                                                MissingPairPolicy policy) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot read scores file: " + path.string());
  return read(in, policy);
}

void ExternalScoresScorer::insert(std::string_view query, std::string_view title, double score) {
  insert_hashed(sha256_hex(query), sha256_hex(title), score);
}

void ExternalScoresScorer::insert_hashed(std::string query_sha256, std::string title_sha256,
                                         double score) {
  if (!(score >= 0.0 && score <= kMaxSimilarity)) {
    throw std::invalid_argument("similarity score outside [0,5]");
  }
  scores_[{strings::to_lower_ascii(query_sha256), strings::to_lower_ascii(title_sha256)}] = score;
}

void ExternalScoresScorer::write(std::ostream& out) const {
  out << "query_sha256\ttitle_sha256\tscore\n";
  for (const auto& [key, s] : scores_) {
    out << key.first << '\t' << key.second << '\t' << strings::format_double(s) << '\n';
  }
}

double ExternalScoresScorer::score(std::string_view query, std::string_view title) const {
  if (normalize(query).empty() || normalize(title).empty()) return 0.0;
  auto key = std::pair{sha256_hex(query), sha256_hex(title)};
  const auto it = scores_.find(key);
  if (it != scores_.end()) return it->second;
  if (policy_ == MissingPairPolicy::fallback_builtin) return fallback_.score(query, title);
  throw MissingScoreError("no precomputed similarity for query '" + std::string(query) +
                          "' and title '" + std::string(title) + "' (key " + key.first + " " +
                          key.second + ")");
}

std::string_view to_string(SimilarityCase c) {
  switch (c) {
    case SimilarityCase::context_mismatch: return "context_mismatch";
    case SimilarityCase::query_fake_only: return "query_fake_only";
    case SimilarityCase::title_fake_only: return "title_fake_only";
    case SimilarityCase::both_fake: return "both_fake";
    case SimilarityCase::no_fake_signal: return "no_fake_signal";
  }
  return "no_fake_signal";
}

Threshold::Threshold(double value) : value_(value) {
  if (!(value >= 0.0 && value <= kMaxSimilarity)) {
    throw std::invalid_argument("similarity threshold must lie in [0,5]");
  }
}

SimilarityCase classify_case(double s, int query_uns, int title_uns, Threshold threshold) {
  if (s < threshold.value()) return SimilarityCase::context_mismatch;
  if (query_uns && title_uns) return SimilarityCase::both_fake;
  if (query_uns) return SimilarityCase::query_fake_only;
  if (title_uns) return SimilarityCase::title_fake_only;
  return SimilarityCase::no_fake_signal;
}

PostSimilaritySummary aggregate_post(const SimilarityScorer& scorer, std::string_view query,
                                     std::span<const std::string> titles,
                                     const TraceMatcher& matcher, Threshold threshold) {
  PostSimilaritySummary summary;
  if (titles.empty()) return summary;
  const int query_uns = matcher.detect(query).uns;
  double sum = 0.0;
  std::size_t uns = 0, db = 0;
  for (const auto& title : titles) {
    TitleAssessment a;
    a.title = title;
    a.score = scorer.score(query, title);
    a.traces = matcher.detect(title);
    a.outcome = classify_case(a.score, query_uns, a.traces.uns, threshold);
    summary.s_max = std::max(summary.s_max, a.score);
    sum += a.score;
    uns += static_cast<std::size_t>(a.traces.uns);
    db += static_cast<std::size_t>(a.traces.db);
    summary.cases.push_back(a.outcome);
    summary.titles.push_back(std::move(a));
  }
  const auto n = static_cast<double>(titles.size());
  summary.s_mean = std::min(sum / n, summary.s_max);
  summary.title_uns_frac = static_cast<double>(uns) / n;
  summary.title_db_frac = static_cast<double>(db) / n;
  return summary;
}

}  // namespace veritrace
