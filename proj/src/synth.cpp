#include "veritrace/synth.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "veritrace/random.hpp"

namespace veritrace {

namespace {

struct EventVocab {
  const char* name;
  std::array<const char*, 6> words;
};

constexpr std::array<EventVocab, 8> kEvents = {{
    {"sandy", {"hurricane", "sandy", "storm", "flooding", "manhattan", "surge"}},
    {"boston", {"boston", "marathon", "bombing", "suspects", "finish", "runners"}},
    {"mh370", {"malaysia", "airlines", "flight", "mh370", "ocean", "debris"}},
    {"nepal", {"nepal", "earthquake", "kathmandu", "rubble", "rescue", "temple"}},
    {"eclipse", {"solar", "eclipse", "moon", "shadow", "corona", "totality"}},
    {"garissa", {"garissa", "university", "attack", "kenya", "students", "campus"}},
    {"bringback", {"bring", "back", "girls", "nigeria", "chibok", "schoolgirls"}},
    {"samurai", {"samurai", "soldier", "statue", "japan", "warrior", "armor"}},
}};

constexpr std::array<const char*, 16> kFiller = {
    "photo", "picture", "shows", "today", "people", "street", "view",   "scene",
    "amazing", "moment", "captured", "latest", "update", "city", "crowd", "morning"};

constexpr std::array<const char*, 16> kEarlierContext = {
    "archive", "exhibition", "movie",   "studio",  "painting", "museum",   "wallpaper", "poster",
    "gallery", "vintage",    "postcard", "artwork", "render",   "tourism", "1998",      "catalogue"};

template <std::size_t N>
const char* pick(Rng& rng, const std::array<const char*, N>& pool) {
  return pool[rng.uniform_index(N)];
}

const std::string& pick(Rng& rng, const std::vector<std::string>& pool) {
  return pool[rng.uniform_index(pool.size())];
}

void append(std::string& s, std::string_view word) {
  if (!s.empty()) s += ' ';
  s += word;
}

std::string event_phrase(Rng& rng, const EventVocab& ev, std::size_t words) {
  std::string s;
  for (std::size_t i = 0; i < words; ++i) append(s, ev.words[rng.uniform_index(ev.words.size())]);
  return s;
}

char pad_digit(std::size_t v) { return static_cast<char>('0' + v % 10); }

std::string numbered(std::string_view prefix, std::size_t i) {
  std::string s(prefix);
  s += pad_digit(i / 1000);
  s += pad_digit(i / 100);
  s += pad_digit(i / 10);
  s += pad_digit(i);
  return s;
}

}  // namespace

SynthDataset generate_planted(const SynthSpec& spec, const TraceLexicon& lexicon) {
  if (spec.posts < 2) throw std::invalid_argument("generate_planted: need at least 2 posts");
  if (spec.min_titles > spec.max_titles || spec.max_titles > kMaxTitles) {
    throw std::invalid_argument("generate_planted: title range must lie within 0..10");
  }
  if (spec.events == 0 || spec.events > kEvents.size()) {
    throw std::invalid_argument("generate_planted: events must be 1.." + std::to_string(kEvents.size()));
  }
  for (double p : {spec.fake_fraction, spec.fake_title_phrase_p, spec.real_title_phrase_p, spec.fake_tweet_fake_p,
                   spec.fake_tweet_doubt_p, spec.real_tweet_fake_p, spec.real_tweet_doubt_p}) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("generate_planted: probabilities must lie in [0, 1]");
  }
  if (lexicon.fake_phrases.empty() || lexicon.doubt_phrases.empty()) {
    throw std::invalid_argument("generate_planted: lexicon needs fake and doubt phrases");
  }
  const double lo_cut = spec.threshold - spec.score_margin;
  const double hi_cut = spec.threshold + spec.score_margin;
  if (lo_cut <= 0.0 || hi_cut >= kMaxSimilarity) {
    throw std::invalid_argument("generate_planted: threshold margin leaves no score range");
  }

  Rng rng(spec.seed);
  SynthDataset out;
  const auto n_fake = static_cast<std::size_t>(static_cast<double>(spec.posts) * spec.fake_fraction + 0.5);
  std::vector<int> labels(spec.posts, 0);
  for (std::size_t i = 0; i < n_fake && i < spec.posts; ++i) labels[i] = 1;
  rng.shuffle(std::span<int>(labels));

  const Timestamp retrieved{std::chrono::seconds{1420070400}};  // 2015-01-01T00:00:00Z
  for (std::size_t i = 0; i < spec.posts; ++i) {
    const int label = labels[i];
    const EventVocab& ev = kEvents[rng.uniform_index(spec.events)];
    Post post;
    post.post_id = numbered("p", i + 1);
    post.user_id = numbered("u", rng.uniform_index(spec.posts) + 1);
    post.event = ev.name;
    post.image_id = std::string(ev.name) + "_" + numbered("img", i + 1);
    post.label = label == 1 ? Label::fake : Label::real;
    post.media_kind = MediaKind::image;

    std::string tweet = event_phrase(rng, ev, 2 + rng.uniform_index(2));
    append(tweet, pick(rng, kFiller));
    append(tweet, pick(rng, kFiller));
    const double p_fake = label == 1 ? spec.fake_tweet_fake_p : spec.real_tweet_fake_p;
    const double p_doubt = label == 1 ? spec.fake_tweet_doubt_p : spec.real_tweet_doubt_p;
    if (rng.bernoulli(p_fake)) append(tweet, pick(rng, lexicon.fake_phrases));
    if (rng.bernoulli(p_doubt)) {
      if (rng.bernoulli(0.5)) {
        tweet += '?';
      } else {
        append(tweet, pick(rng, lexicon.doubt_phrases));
      }
    }
    post.text = tweet;

    const std::size_t n_titles = spec.min_titles + rng.uniform_index(spec.max_titles - spec.min_titles + 1);
    const double p_phrase = label == 1 ? spec.fake_title_phrase_p : spec.real_title_phrase_p;
    EvidenceRecord rec;
    rec.image_id = post.image_id;
    rec.engine = spec.engine;
    rec.retrieved_at = retrieved;
    std::vector<double> scores;
    for (std::size_t t = 0; t < n_titles; ++t) {
      const bool phrase = rng.bernoulli(p_phrase);
      std::string title;
      double score = 0.0;
      // Redraw until the title is new for this record so none is dropped as
      // a duplicate later.
      do {
        if (phrase || label == 0) {
          title = event_phrase(rng, ev, 2 + rng.uniform_index(2));
          append(title, pick(rng, kFiller));
          if (phrase) append(title, pick(rng, lexicon.fake_phrases));
          append(title, pick(rng, kFiller));
          score = rng.uniform(hi_cut, kMaxSimilarity);
        } else {
          title = pick(rng, kEarlierContext);
          append(title, pick(rng, kEarlierContext));
          append(title, pick(rng, kEarlierContext));
          append(title, pick(rng, kFiller));
          score = rng.uniform(0.0, lo_cut);
        }
      } while (std::find(rec.titles.begin(), rec.titles.end(), title) != rec.titles.end());
      if (phrase) ++out.titles_with_phrase[label];
      ++out.titles_total[label];
      rec.titles.push_back(title);
      scores.push_back(score);
    }
    for (std::size_t t = 0; t < rec.titles.size(); ++t) out.scores.insert(post.text, rec.titles[t], scores[t]);
    if (!rec.titles.empty()) out.store.upsert(std::move(rec));
    out.corpus.add(std::move(post));
  }
  return out;
}

}  // namespace veritrace
