#include "veritrace/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <json.hpp>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "veritrace/random.hpp"
#include "veritrace/strings.hpp"

namespace veritrace {

namespace {

constexpr std::array<std::string_view, 7> kTsvColumns = {
    "post_id", "text", "user_id", "image_id", "event", "label", "media_kind"};

using nlohmann::json;

}  // namespace

std::string_view to_string(Label label) { return label == Label::fake ? "fake" : "real"; }

std::string_view to_string(MediaKind kind) {
  return kind == MediaKind::image ? "image" : "video";
}

Label parse_label(std::string_view s) {
  if (s == "fake") return Label::fake;
  if (s == "real") return Label::real;
  throw InputError("unknown label '" + std::string(s) + "' (expected fake|real)");
}

MediaKind parse_media_kind(std::string_view s) {
  if (s == "image") return MediaKind::image;
  if (s == "video") return MediaKind::video;
  throw InputError("unknown media_kind '" + std::string(s) + "' (expected image|video)");
}

CorpusFormat parse_corpus_format(std::string_view s) {
  if (s == "vmu_tsv" || s == "tsv") return CorpusFormat::vmu_tsv;
  if (s == "fixture_jsonl" || s == "jsonl") return CorpusFormat::fixture_jsonl;
  throw InputError("unknown corpus format '" + std::string(s) + "'");
}

SplitUnit parse_split_unit(std::string_view s) {
  if (s == "post") return SplitUnit::post;
  if (s == "image") return SplitUnit::image;
  throw InputError("unknown split unit '" + std::string(s) + "' (expected post|image)");
}

void Corpus::add(Post post) {
  events_.insert(post.event);
  posts_.push_back(std::move(post));
}

std::size_t Corpus::count(Label label) const {
  return static_cast<std::size_t>(std::count_if(
      posts_.begin(), posts_.end(), [label](const Post& p) { return p.label == label; }));
}

namespace {

void check_unique(std::unordered_set<std::string>& seen, const Post& post, std::size_t line) {
  if (!seen.insert(post.post_id).second) {
    throw InputError("duplicate post_id '" + post.post_id + "' at line " + std::to_string(line));
  }
}

CorpusLoadResult read_tsv(std::istream& in) {
  CorpusLoadResult result;
  std::string line;
  if (!std::getline(in, line)) return result;  // empty file: empty corpus
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = strings::split(line, '\t');
  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto& name = header[i];
    const bool known = name == "lang" || std::find(kTsvColumns.begin(), kTsvColumns.end(),
                                                   name) != kTsvColumns.end();
    if (!known || !column.emplace(name, i).second) {
      throw InputError("corpus header mismatch: unexpected column '" + name + "'");
    }
  }
  for (auto name : kTsvColumns) {
    if (!column.count(std::string(name))) {
      throw InputError("corpus header mismatch: missing column '" + std::string(name) + "'");
    }
  }

  std::unordered_set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = strings::split(line, '\t');
    if (cells.size() != header.size()) {
      result.diagnostics.push_back({line_no, "expected " + std::to_string(header.size()) +
                                                 " columns, found " +
                                                 std::to_string(cells.size())});
      continue;
    }
    auto cell = [&](std::string_view name) {
      return strings::unescape_tsv(cells[column.at(std::string(name))]);
    };
    Post post;
    try {
      post.post_id = cell("post_id");
      post.text = cell("text");
      post.user_id = cell("user_id");
      post.image_id = cell("image_id");
      post.event = cell("event");
      post.label = parse_label(cell("label"));
      post.media_kind = parse_media_kind(cell("media_kind"));
      if (post.post_id.empty()) throw InputError("empty post_id");
    } catch (const InputError& e) {
      result.diagnostics.push_back({line_no, e.what()});
      continue;
    }
    check_unique(seen, post, line_no);
    result.corpus.add(std::move(post));
  }
  return result;
}

CorpusLoadResult read_jsonl(std::istream& in) {
  CorpusLoadResult result;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (strings::trim(line).empty()) continue;
    Post post;
    try {
      const auto j = json::parse(line);
      post.post_id = j.at("post_id").get<std::string>();
      post.text = j.at("text").get<std::string>();
      post.user_id = j.at("user_id").get<std::string>();
      post.image_id = j.at("image_id").get<std::string>();
      post.event = j.at("event").get<std::string>();
      post.label = parse_label(j.at("label").get<std::string>());
      post.media_kind = parse_media_kind(j.at("media_kind").get<std::string>());
      if (post.post_id.empty()) throw InputError("empty post_id");
    } catch (const json::exception& e) {
      result.diagnostics.push_back({line_no, e.what()});
      continue;
    } catch (const InputError& e) {
      result.diagnostics.push_back({line_no, e.what()});
      continue;
    }
    check_unique(seen, post, line_no);
    result.corpus.add(std::move(post));
  }
  return result;
}

}  // namespace

CorpusLoadResult read_corpus(std::istream& in, CorpusFormat format) {
  return format == CorpusFormat::vmu_tsv ? read_tsv(in) : read_jsonl(in);
}

CorpusLoadResult load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read corpus file: " + path.string());
  return read_corpus(in, format);
}

void write_corpus(const Corpus& corpus, std::ostream& out, CorpusFormat format) {
  if (format == CorpusFormat::vmu_tsv) {
    for (std::size_t i = 0; i < kTsvColumns.size(); ++i) {
      out << (i ? "\t" : "") << kTsvColumns[i];
    }
    out << '\n';
    for (const auto& p : corpus.posts()) {
      out << strings::escape_tsv(p.post_id) << '\t' << strings::escape_tsv(p.text) << '\t'
          << strings::escape_tsv(p.user_id) << '\t' << strings::escape_tsv(p.image_id) << '\t'
          << strings::escape_tsv(p.event) << '\t' << to_string(p.label) << '\t'
          << to_string(p.media_kind) << '\n';
    }
    return;
  }
  for (const auto& p : corpus.posts()) {
    json j;
    j["post_id"] = p.post_id;
    j["text"] = p.text;
    j["user_id"] = p.user_id;
    j["image_id"] = p.image_id;
    j["event"] = p.event;
    j["label"] = to_string(p.label);
    j["media_kind"] = to_string(p.media_kind);
    out << j.dump() << '\n';
  }
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path, CorpusFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write corpus file: " + path.string());
  write_corpus(corpus, out, format);
}

Corpus filter_media(const Corpus& corpus, MediaKind keep) {
  Corpus out;
  for (const auto& p : corpus.posts()) {
    if (p.media_kind == keep) out.add(p);
  }
  return out;
}

void SplitSpec::validate() const {
  for (double f : {train_frac, val_frac, test_frac}) {
    if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("split fractions must lie in (0,1)");
  }
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must sum to 1");
  }
}

namespace {

struct SplitGroup {
  std::vector<std::size_t> members;  // indices into corpus.posts()
  Label label = Label::real;
};

std::vector<SplitGroup> make_groups(const Corpus& corpus, SplitUnit unit) {
  std::vector<SplitGroup> groups;
  const auto& posts = corpus.posts();
  if (unit == SplitUnit::post) {
    groups.reserve(posts.size());
    for (std::size_t i = 0; i < posts.size(); ++i) groups.push_back({{i}, posts[i].label});
    return groups;
  }
  std::unordered_map<std::string, std::size_t> by_image;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    auto [it, inserted] = by_image.emplace(posts[i].image_id, groups.size());
    if (inserted) groups.push_back({});
    groups[it->second].members.push_back(i);
  }
  for (auto& g : groups) {
    std::size_t fake = 0;
    for (auto i : g.members) fake += posts[i].label == Label::fake;
    // majority label of the image's posts, ties toward fake
    g.label = 2 * fake >= g.members.size() ? Label::fake : Label::real;
  }
  return groups;
}

// floor() with a small allowance for products like 0.15 * 20 = 2.9999999999999996.
std::size_t floor_count(double x) { return static_cast<std::size_t>(std::floor(x + 1e-9)); }

}  // namespace

CorpusSplits stratified_split(const Corpus& corpus, const SplitSpec& spec, SplitUnit unit) {
  spec.validate();
  const std::array<double, 3> fracs = {spec.train_frac, spec.val_frac, spec.test_frac};
  auto groups = make_groups(corpus, unit);

  // Class order is fixed (fake, real) so the draw sequence is reproducible.
  std::array<std::vector<std::size_t>, 2> strata;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    strata[groups[g].label == Label::fake ? 0 : 1].push_back(g);
  }
  if (strata[0].empty() || strata[1].empty()) {
    throw InputError("corpus too small to stratify: both labels must be present");
  }

  const std::size_t total = groups.size();
  // Overall split sizes: largest remainder, ties to the earlier split.
  std::array<std::size_t, 3> target{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (int s = 0; s < 3; ++s) {
    const double exact = static_cast<double>(total) * fracs[s];
    target[s] = floor_count(exact);
    remainder[s] = exact - static_cast<double>(target[s]);
    assigned += target[s];
  }
  for (; assigned < total; ++assigned) {
    int best = 0;
    for (int s = 1; s < 3; ++s) {
      if (remainder[s] > remainder[best]) best = s;
    }
    ++target[best];
    remainder[best] = -1.0;
  }
  for (auto t : target) {
    if (t == 0) throw InputError("corpus too small: a split would be empty");
  }

  // Per-stratum floors, then hand out each stratum's leftovers to splits that
  // still have room, preferring the largest fractional part.
  std::array<std::array<std::size_t, 3>, 2> alloc{};
  std::array<std::size_t, 3> deficit = target;
  for (int c = 0; c < 2; ++c) {
    for (int s = 0; s < 3; ++s) {
      alloc[c][s] = floor_count(static_cast<double>(strata[c].size()) * fracs[s]);
      deficit[s] -= alloc[c][s];
    }
  }
  for (int c = 0; c < 2; ++c) {
    std::size_t left = strata[c].size() - (alloc[c][0] + alloc[c][1] + alloc[c][2]);
    std::array<bool, 3> bumped{};
    for (; left > 0; --left) {
      int best = -1;
      double best_frac = -1.0;
      for (int pass = 0; pass < 2 && best < 0; ++pass) {
        for (int s = 0; s < 3; ++s) {
          if (deficit[s] == 0 || (pass == 0 && bumped[s])) continue;
          const double exact = static_cast<double>(strata[c].size()) * fracs[s];
          const double frac = exact - std::floor(exact + 1e-9);
          if (frac > best_frac) {
            best_frac = frac;
            best = s;
          }
        }
      }
      ++alloc[c][best];
      --deficit[best];
      bumped[best] = true;
    }
  }

  Rng rng(spec.seed);
  std::vector<int> split_of_post(corpus.size(), -1);
  for (int c = 0; c < 2; ++c) {
    auto& members = strata[c];
    rng.shuffle(std::span<std::size_t>(members));
    std::size_t pos = 0;
    for (int s = 0; s < 3; ++s) {
      for (std::size_t k = 0; k < alloc[c][s]; ++k, ++pos) {
        for (auto i : groups[members[pos]].members) split_of_post[i] = s;
      }
    }
  }

  CorpusSplits out;
  const auto& posts = corpus.posts();
  for (std::size_t i = 0; i < posts.size(); ++i) {
    switch (split_of_post[i]) {
      case 0: out.train.add(posts[i]); break;
      case 1: out.validation.add(posts[i]); break;
      default: out.test.add(posts[i]); break;
    }
  }
  return out;
}

CorpusSummary summarize(const Corpus& corpus) {
  CorpusSummary summary;
  summary.total.event = "Total";
  std::map<std::string, std::size_t> index;
  std::set<std::pair<std::string, std::string>> images;  // (event, image_id|label)
  std::set<std::string> total_images;
  for (const auto& p : corpus.posts()) {
    auto [it, inserted] = index.emplace(p.event, summary.events.size());
    if (inserted) summary.events.push_back({p.event});
    auto& row = summary.events[it->second];
    const bool fake = p.label == Label::fake;
    const std::string image_key = p.image_id + '\x1f' + std::string(to_string(p.label));
    const bool new_image = images.emplace(p.event, image_key).second;
    const bool new_total_image = total_images.insert(image_key).second;
    (fake ? row.fake_posts : row.real_posts) += 1;
    (fake ? summary.total.fake_posts : summary.total.real_posts) += 1;
    if (new_image) (fake ? row.fake_images : row.real_images) += 1;
    if (new_total_image) (fake ? summary.total.fake_images : summary.total.real_images) += 1;
  }
  return summary;
}

std::string format_summary(const CorpusSummary& summary) {
  std::size_t width = 5;
  for (const auto& e : summary.events) width = std::max(width, e.event.size());
  std::ostringstream os;
  auto cell = [](std::size_t v) { return v == 0 ? std::string("-") : std::to_string(v); };
  os << std::left << std::setw(static_cast<int>(width)) << "Event" << std::right
     << std::setw(13) << "Real Images" << std::setw(13) << "Real Posts" << std::setw(13)
     << "Fake Images" << std::setw(13) << "Fake Posts" << '\n';
  auto row = [&](const EventCounts& e) {
    os << std::left << std::setw(static_cast<int>(width)) << e.event << std::right
       << std::setw(13) << cell(e.real_images) << std::setw(13) << cell(e.real_posts)
       << std::setw(13) << cell(e.fake_images) << std::setw(13) << cell(e.fake_posts) << '\n';
  };
  for (const auto& e : summary.events) row(e);
  row(summary.total);
  os << summary.events.size() << " events\n";
  return os.str();
}

CorpusLoadResult convert_mediaeval(std::istream& in) {
  CorpusLoadResult result;
  std::string line;
  if (!std::getline(in, line)) return result;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = strings::split(line, '\t');
  auto find_col = [&](std::initializer_list<std::string_view> names) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      for (auto n : names) {
        if (header[i] == n) return i;
      }
    }
    throw InputError("MediaEval header mismatch: missing column '" +
                     std::string(*names.begin()) + "'");
  };
  const auto c_id = find_col({"tweetId"});
  const auto c_text = find_col({"tweetText"});
  const auto c_user = find_col({"userId"});
  const auto c_image = find_col({"imageId(s)", "imageId"});
  const auto c_label = find_col({"label"});

  std::unordered_set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = strings::split(line, '\t');
    if (cells.size() < header.size()) {
      result.diagnostics.push_back({line_no, "short row"});
      continue;
    }
    Post post;
    post.post_id = cells[c_id];
    post.text = strings::collapse_whitespace(cells[c_text]);
    post.user_id = cells[c_user];
    auto image = std::string(strings::trim(strings::split(cells[c_image], ',').front()));
    post.image_id = image;
    post.event = image.substr(0, image.find('_'));
    const auto label = strings::to_lower_ascii(strings::trim(cells[c_label]));
    if (label == "fake" || label == "humor") {
      post.label = Label::fake;
    } else if (label == "real") {
      post.label = Label::real;
    } else {
      result.diagnostics.push_back({line_no, "unknown label '" + label + "'"});
      continue;
    }
    post.media_kind = strings::to_lower_ascii(image).find("video") != std::string::npos
                          ? MediaKind::video
                          : MediaKind::image;
    if (post.post_id.empty() || post.image_id.empty()) {
      result.diagnostics.push_back({line_no, "missing tweetId or imageId"});
      continue;
    }
    check_unique(seen, post, line_no);
    result.corpus.add(std::move(post));
  }
  return result;
}

}  // namespace veritrace
