#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "veritrace/errors.hpp"

namespace veritrace {

enum class Label : std::uint8_t { real = 0, fake = 1 };
enum class MediaKind : std::uint8_t { image, video };

std::string_view to_string(Label label);
std::string_view to_string(MediaKind kind);
Label parse_label(std::string_view s);          // "fake" | "real"
MediaKind parse_media_kind(std::string_view s);  // "image" | "video"
inline int label_value(Label label) { return static_cast<int>(label); }

/// One multimedia post: claim text plus the attached image.
struct Post {
  std::string post_id;
  std::string text;  // already in the analysis language
  std::string user_id;
  std::string image_id;
  std::string event;
  Label label = Label::real;
  MediaKind media_kind = MediaKind::image;

  /// Posts with empty text are kept but flagged.
  bool degenerate() const { return text.empty(); }

  friend bool operator==(const Post&, const Post&) = default;
};

/// Ordered posts plus the set of events they belong to. Use add() so the
/// event set stays consistent.
class Corpus {
 public:
  void add(Post post);
  const std::vector<Post>& posts() const { return posts_; }
  const std::set<std::string>& events() const { return events_; }
  std::size_t size() const { return posts_.size(); }
  bool empty() const { return posts_.empty(); }
  std::size_t count(Label label) const;

 private:
  std::vector<Post> posts_;
  std::set<std::string> events_;
};

enum class CorpusFormat { vmu_tsv, fixture_jsonl };
CorpusFormat parse_corpus_format(std::string_view s);

struct CorpusLoadResult {
  Corpus corpus;
  std::vector<Diagnostic> diagnostics;  // malformed rows, skipped
};

/// Throws InputError on an unreadable file, a header mismatch or a duplicate
/// post_id. Rows that fail to parse are skipped and reported with their line.
CorpusLoadResult load_corpus(const std::filesystem::path& path, CorpusFormat format);
CorpusLoadResult read_corpus(std::istream& in, CorpusFormat format);

void save_corpus(const Corpus& corpus, const std::filesystem::path& path, CorpusFormat format);
void write_corpus(const Corpus& corpus, std::ostream& out, CorpusFormat format);

/// Keeps posts whose media kind equals `keep`, preserving order.
Corpus filter_media(const Corpus& corpus, MediaKind keep);

struct SplitSpec {
  double train_frac = 0.70;
  double val_frac = 0.15;
  double test_frac = 0.15;
  std::uint64_t seed = 7;

  /// Throws std::invalid_argument unless each fraction is in (0,1) and the
  /// three sum to 1 within 1e-9.
  void validate() const;
};

/// Splitting by image keeps every post of one image in the same split.
enum class SplitUnit { post, image };
SplitUnit parse_split_unit(std::string_view s);

struct CorpusSplits {
  Corpus train;
  Corpus validation;
  Corpus test;
};

/// Label-stratified three-way split. Per-label split sizes are within one
/// unit of the exact proportion and overall sizes follow largest-remainder
/// rounding. Each split keeps the input order. Throws InputError when a label
/// is missing or a split would be empty.
CorpusSplits stratified_split(const Corpus& corpus, const SplitSpec& spec,
                              SplitUnit unit = SplitUnit::post);

/// Per-event image/post counts, in order of first appearance.
struct EventCounts {
  std::string event;
  std::size_t real_images = 0;
  std::size_t real_posts = 0;
  std::size_t fake_images = 0;
  std::size_t fake_posts = 0;
};

struct CorpusSummary {
  std::vector<EventCounts> events;
  EventCounts total;  // event == "Total"
};

CorpusSummary summarize(const Corpus& corpus);
std::string format_summary(const CorpusSummary& summary);

/// One-shot adapter for the upstream MediaEval 2015 tweets file
/// (tweetId, tweetText, userId, imageId(s), username, timestamp, label).
/// The event is the image id prefix before the first '_', "humor" counts as
/// fake, ids mentioning "video" are video posts, and only the first of
/// several image ids is kept.
CorpusLoadResult convert_mediaeval(std::istream& in);

}  // namespace veritrace
