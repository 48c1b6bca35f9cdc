#include "veritrace/features.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <thread>

#include "veritrace/strings.hpp"

namespace veritrace {

TitleTraceReduce parse_title_trace_reduce(std::string_view s) {
  if (s == "fraction") return TitleTraceReduce::fraction;
  if (s == "any") return TitleTraceReduce::any;
  throw InputError("unknown title_trace_reduce '" + std::string(s) + "' (expected fraction|any)");
}

FeaturizedPost featurize(const Post& post, const FeatureContext& ctx) {
  if (post.media_kind != MediaKind::image) {
    throw std::invalid_argument("post '" + post.post_id + "' is not an image post");
  }
  FeaturizedPost out;
  out.query_traces = ctx.matcher.detect(post.text);
  out.features.uns_query = out.query_traces.uns;
  out.features.db_query = out.query_traces.db;

  const auto titles = get_titles(ctx.store, post.image_id, ctx.engine, ctx.k);
  if (titles.empty()) {
    out.low_evidence = true;
    return out;
  }
  out.similarity = aggregate_post(ctx.scorer, post.text, titles, ctx.matcher, ctx.threshold);
  const auto& sim = out.similarity;
  if (ctx.reduce == TitleTraceReduce::fraction) {
    out.features.uns_titles = sim.title_uns_frac;
    out.features.db_titles = sim.title_db_frac;
  } else {
    out.features.uns_titles = sim.title_uns_frac > 0.0 ? 1.0 : 0.0;
    out.features.db_titles = sim.title_db_frac > 0.0 ? 1.0 : 0.0;
  }
  out.features.s = sim.s_max;
  for (double v : out.features.values()) {
    if (!std::isfinite(v)) throw std::runtime_error("non-finite feature for " + post.post_id);
  }
  return out;
}

FeatureTable featurize_corpus(const Corpus& corpus, const FeatureContext& ctx,
                              std::vector<Diagnostic>* diagnostics, unsigned threads) {
  const auto& posts = corpus.posts();
  struct Slot {
    std::optional<FeaturizedPost> value;
    std::string error;
  };
  std::vector<Slot> slots(posts.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        slots[i].value = featurize(posts[i], ctx);
      } catch (const std::exception& e) {
        slots[i].error = e.what();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(posts.size())));
  if (threads <= 1) {
    work(0, posts.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (posts.size() + threads - 1) / threads;
    for (std::size_t begin = 0; begin < posts.size(); begin += chunk) {
      pool.emplace_back(work, begin, std::min(posts.size(), begin + chunk));
    }
  }

  FeatureTable table;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    if (!slots[i].value) {
      if (diagnostics) diagnostics->push_back({i + 1, posts[i].post_id + ": " + slots[i].error});
      continue;
    }
    table.post_ids.push_back(posts[i].post_id);
    table.rows.push_back(slots[i].value->features);
    table.labels.push_back(label_value(posts[i].label));
    table.low_evidence.push_back(slots[i].value->low_evidence);
  }
  return table;
}

namespace {

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Splits one CSV record; handles quoted fields without embedded newlines.
std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cells.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cells.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back();
    } else {
      cells.back() += c;
    }
  }
  return cells;
}

constexpr std::string_view kHeader = "post_id,uns_query,uns_titles,db_query,db_titles,s,label";

}  // namespace

void write_feature_csv(const FeatureTable& table, std::ostream& out) {
  out << kHeader << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << csv_quote(table.post_ids[i]);
    for (double v : table.rows[i].values()) out << ',' << strings::format_g9(v);
    out << ',' << table.labels[i] << '\n';
  }
}

FeatureTable read_feature_csv(std::istream& in) {
  FeatureTable table;
  std::string line;
  if (!std::getline(in, line)) throw InputError("feature CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw InputError("feature CSV header mismatch");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = csv_split(line);
    if (cells.size() != kFeatureCount + 2) {
      throw InputError("feature CSV line " + std::to_string(line_no) + ": expected 7 fields");
    }
    std::array<double, kFeatureCount> v{};
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      v[f] = strings::parse_double(cells[f + 1], kFeatureNames[f]);
    }
    const auto label = strings::parse_int(cells.back(), "label");
    if (label != 0 && label != 1) throw InputError("feature CSV: label must be 0 or 1");
    table.post_ids.push_back(cells[0]);
    table.rows.push_back(FeatureVector::from_values(v));
    table.labels.push_back(static_cast<int>(label));
    table.low_evidence.push_back(false);
  }
  return table;
}

}  // namespace veritrace
