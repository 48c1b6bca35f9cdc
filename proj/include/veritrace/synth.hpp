#pragma once

#include <cstddef>
#include <cstdint>

#include "veritrace/corpus.hpp"
#include "veritrace/evidence.hpp"
#include "veritrace/similarity.hpp"
#include "veritrace/traces.hpp"

namespace veritrace {

/// Parameters of the planted-signal corpus generator. Fake posts get evidence
/// titles carrying a fake phrase with `fake_title_phrase_p`; real posts with
/// `real_title_phrase_p`. Titles of a fake post that carry no phrase come from
/// an unrelated "earlier context" vocabulary and are scored below the
/// threshold; every other title is scored above it.
struct SynthSpec {
  std::size_t posts = 200;
  double fake_fraction = 0.5;
  std::size_t min_titles = 3;
  std::size_t max_titles = 10;
  double fake_title_phrase_p = 0.8;
  double real_title_phrase_p = 0.05;
  double fake_tweet_fake_p = 0.3;
  double fake_tweet_doubt_p = 0.3;
  double real_tweet_fake_p = 0.05;
  double real_tweet_doubt_p = 0.05;
  double threshold = Threshold::kDefault;
  double score_margin = 0.2;  // keeps drawn scores this far from the threshold
  std::size_t events = 5;
  Engine engine = Engine::bing_visual;
  std::uint64_t seed = 7;
};

struct SynthDataset {
  Corpus corpus;
  EvidenceStore store;
  ExternalScoresScorer scores{MissingPairPolicy::error};
  std::size_t titles_with_phrase[2] = {0, 0};  // indexed by label
  std::size_t titles_total[2] = {0, 0};
};

/// Deterministic for a given spec. Fake phrases are drawn from
/// `lexicon.fake_phrases`, doubt phrases from `lexicon.doubt_phrases`.
/// Throws std::invalid_argument for an inconsistent spec.
SynthDataset generate_planted(const SynthSpec& spec, const TraceLexicon& lexicon = TraceLexicon::defaults());

}  // namespace veritrace
