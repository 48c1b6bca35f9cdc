#include "veritrace/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "veritrace/errors.hpp"
#include "veritrace/strings.hpp"

namespace veritrace {

using namespace strings;

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw InputError("config line " + std::to_string(line) + ": " + msg);
}

bool is_bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '-';
}

class ValueParser {
 public:
  ValueParser(std::string_view text, std::size_t line) : s_(text), line_(line) {}

  ConfigValue parse() {
    ConfigValue v = value();
    skip_ws();
    if (pos_ != s_.size()) fail(line_, "unexpected text after value: '" + std::string(s_.substr(pos_)) + "'");
    return v;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r')) ++pos_;
  }

  ConfigValue value() {
    skip_ws();
    if (pos_ >= s_.size()) fail(line_, "missing value");
    const char c = s_[pos_];
    if (c == '"') return {basic_string()};
    if (c == '\'') return {literal_string()};
    if (c == '[') return {array()};
    return scalar();
  }

  std::string basic_string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) break;
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case 'r': c = '\r'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(line_, std::string("unsupported escape \\") + e);
        }
      }
      out += c;
    }
    if (pos_ >= s_.size()) fail(line_, "unterminated string");
    ++pos_;
    return out;
  }

  std::string literal_string() {
    ++pos_;
    const std::size_t end = s_.find('\'', pos_);
    if (end == std::string_view::npos) fail(line_, "unterminated string");
    std::string out(s_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return out;
  }

  ConfigArray array() {
    ++pos_;
    ConfigArray out;
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ']') {
      ++pos_;
      return out;
    }
    while (true) {
      out.push_back(value());
      skip_ws();
      if (pos_ >= s_.size()) fail(line_, "unterminated array");
      if (s_[pos_] == ',') {
        ++pos_;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
          ++pos_;
          return out;
        }
        continue;
      }
      if (s_[pos_] == ']') {
        ++pos_;
        return out;
      }
      fail(line_, "expected ',' or ']' in array");
    }
  }

  ConfigValue scalar() {
    std::size_t end = pos_;
    while (end < s_.size() && s_[end] != ',' && s_[end] != ']' && s_[end] != ' ' && s_[end] != '\t' &&
           s_[end] != '\n' && s_[end] != '\r') {
      ++end;
    }
    const std::string_view tok = s_.substr(pos_, end - pos_);
    pos_ = end;
    if (tok == "true") return {true};
    if (tok == "false") return {false};
    const bool looks_float = tok.find_first_of(".eE") != std::string_view::npos || tok == "inf" ||
                             tok == "nan";
    try {
      if (looks_float) {
        const double d = parse_double(tok, "config value");
        if (!std::isfinite(d)) fail(line_, "non-finite number");
        return {d};
      }
      return {static_cast<std::int64_t>(parse_int(tok, "config value"))};
    } catch (const InputError&) {
      fail(line_, "cannot parse value '" + std::string(tok) + "' (strings need quotes)");
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_;
};

// Position of a '#' that starts a comment, ignoring ones inside strings.
std::size_t comment_start(std::string_view line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == '\\' && quote == '"') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return i;
    }
  }
  return std::string_view::npos;
}

int bracket_balance(std::string_view text) {
  int depth = 0;
  char quote = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quote) {
      if (c == '\\' && quote == '"') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      --depth;
    }
  }
  return depth;
}

std::string parse_key(std::string_view raw, std::size_t line) {
  const std::string_view key = trim(raw);
  if (key.empty()) fail(line, "empty key");
  for (const std::string& part : split(key, '.')) {
    const std::string_view p = trim(part);
    if (p.empty()) fail(line, "empty key segment in '" + std::string(key) + "'");
    for (char c : p) {
      if (!is_bare_key_char(c)) fail(line, "invalid key '" + std::string(key) + "'");
    }
  }
  std::string out;
  for (const std::string& part : split(key, '.')) {
    if (!out.empty()) out += '.';
    out += trim(part);
  }
  return out;
}

}  // namespace

ConfigDoc parse_config(std::istream& in) {
  ConfigDoc doc;
  std::string table;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (const auto c = comment_start(line); c != std::string::npos) line.resize(c);
    std::string_view t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.size() < 3 || t.back() != ']' || t[1] == '[') fail(lineno, "malformed table header");
      table = parse_key(t.substr(1, t.size() - 2), lineno);
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string_view::npos) fail(lineno, "expected key = value");
    std::string key = parse_key(t.substr(0, eq), lineno);
    std::string value_text(trim(t.substr(eq + 1)));
    const std::size_t start_line = lineno;
    // Arrays may span lines.
    while (bracket_balance(value_text) > 0) {
      if (!std::getline(in, raw)) fail(start_line, "unterminated array");
      ++lineno;
      std::string more = raw;
      if (const auto c = comment_start(more); c != std::string::npos) more.resize(c);
      value_text += ' ';
      value_text += trim(more);
    }
    if (!table.empty()) key = table + "." + key;
    ConfigValue v = ValueParser(value_text, start_line).parse();
    if (!doc.emplace(key, std::move(v)).second) fail(start_line, "duplicate key '" + key + "'");
  }
  return doc;
}

ConfigDoc load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  try {
    return parse_config(in);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

namespace {

const char* type_name(const ConfigValue& v) {
  switch (v.v.index()) {
    case 0: return "string";
    case 1: return "integer";
    case 2: return "float";
    case 3: return "boolean";
    default: return "array";
  }
}

[[noreturn]] void wrong_type(const std::string& key, const ConfigValue& v, const char* want) {
  throw InputError("config key '" + key + "' must be " + want + ", got " + type_name(v));
}

std::string as_string(const std::string& key, const ConfigValue& v) {
  if (const auto* s = std::get_if<std::string>(&v.v)) return *s;
  wrong_type(key, v, "a string");
}

double as_double(const std::string& key, const ConfigValue& v) {
  if (const auto* d = std::get_if<double>(&v.v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v.v)) return static_cast<double>(*i);
  wrong_type(key, v, "a number");
}

std::int64_t as_int(const std::string& key, const ConfigValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v.v)) return *i;
  wrong_type(key, v, "an integer");
}

std::size_t as_count(const std::string& key, const ConfigValue& v) {
  const std::int64_t i = as_int(key, v);
  if (i < 0) throw InputError("config key '" + key + "' must not be negative");
  return static_cast<std::size_t>(i);
}

bool as_bool(const std::string& key, const ConfigValue& v) {
  if (const auto* b = std::get_if<bool>(&v.v)) return *b;
  wrong_type(key, v, "a boolean");
}

std::vector<std::string> as_string_list(const std::string& key, const ConfigValue& v) {
  if (const auto* s = std::get_if<std::string>(&v.v)) return {*s};
  const auto* arr = std::get_if<ConfigArray>(&v.v);
  if (!arr) wrong_type(key, v, "a string or an array of strings");
  std::vector<std::string> out;
  for (const ConfigValue& item : *arr) out.push_back(as_string(key, item));
  return out;
}

}  // namespace

RunConfig resolve_config(const ConfigDoc& doc, const std::filesystem::path& base_dir) {
  RunConfig c;
  bool split_seed_set = false;
  bool neural_seed_set = false;
  auto path = [&](const std::string& key, const ConfigValue& v) {
    std::filesystem::path p = as_string(key, v);
    if (p.empty() || p.is_absolute()) return p;
    return (base_dir / p).lexically_normal();
  };

  using Setter = std::function<void(const std::string&, const ConfigValue&)>;
  const std::map<std::string, Setter, std::less<>> setters = {
      {"seed", [&](auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(as_count(k, v)); }},
      {"paths.corpus", [&](auto& k, auto& v) { c.paths.corpus = path(k, v); }},
      {"paths.corpus_format", [&](auto& k, auto& v) { c.paths.corpus_format = parse_corpus_format(as_string(k, v)); }},
      {"paths.evidence", [&](auto& k, auto& v) { c.paths.evidence = path(k, v); }},
      {"paths.scores", [&](auto& k, auto& v) { c.paths.scores = path(k, v); }},
      {"paths.doubt_lexicon", [&](auto& k, auto& v) { c.paths.doubt_lexicon = path(k, v); }},
      {"paths.fake_lexicon", [&](auto& k, auto& v) { c.paths.fake_lexicon = path(k, v); }},
      {"paths.replay_dir", [&](auto& k, auto& v) { c.paths.replay_dir = path(k, v); }},
      {"paths.output_dir", [&](auto& k, auto& v) { c.paths.output_dir = path(k, v); }},
      {"evidence.engine", [&](auto& k, auto& v) { c.engine = parse_engine(as_string(k, v)); }},
      {"evidence.k", [&](auto& k, auto& v) { c.k = as_count(k, v); }},
      {"evidence.ttl_days", [&](auto& k, auto& v) { c.ttl = std::chrono::hours(24 * as_int(k, v)); }},
      {"evidence.max_attempts", [&](auto& k, auto& v) { c.max_attempts = static_cast<int>(as_count(k, v)); }},
      {"evidence.requests_per_second", [&](auto& k, auto& v) { c.requests_per_second = as_double(k, v); }},
      {"similarity.scorer", [&](auto& k, auto& v) { c.scorer = parse_scorer_kind(as_string(k, v)); }},
      {"similarity.threshold", [&](auto& k, auto& v) { c.threshold = as_double(k, v); }},
      {"similarity.missing_pair",
       [&](auto& k, auto& v) {
         const std::string s = as_string(k, v);
         if (s == "error") c.missing_pair = MissingPairPolicy::error;
         else if (s == "fallback_builtin") c.missing_pair = MissingPairPolicy::fallback_builtin;
         else throw InputError("similarity.missing_pair must be error or fallback_builtin");
       }},
      {"features.title_trace_reduce",
       [&](auto& k, auto& v) { c.title_trace_reduce = parse_title_trace_reduce(as_string(k, v)); }},
      {"features.threads", [&](auto& k, auto& v) { c.threads = static_cast<unsigned>(as_count(k, v)); }},
      {"split.train", [&](auto& k, auto& v) { c.split.train_frac = as_double(k, v); }},
      {"split.val", [&](auto& k, auto& v) { c.split.val_frac = as_double(k, v); }},
      {"split.test", [&](auto& k, auto& v) { c.split.test_frac = as_double(k, v); }},
      {"split.unit", [&](auto& k, auto& v) { c.split_unit = parse_split_unit(as_string(k, v)); }},
      {"split.seed",
       [&](auto& k, auto& v) {
         c.split.seed = static_cast<std::uint64_t>(as_count(k, v));
         split_seed_set = true;
       }},
      {"classifiers.models", [&](auto& k, auto& v) { c.models = as_string_list(k, v); }},
      {"classifiers.standardize", [&](auto& k, auto& v) { c.hyper.standardize = as_bool(k, v); }},
      {"classifiers.logreg_l2", [&](auto& k, auto& v) { c.hyper.logreg_l2 = as_double(k, v); }},
      {"classifiers.logreg_lr", [&](auto& k, auto& v) { c.hyper.logreg_lr = as_double(k, v); }},
      {"classifiers.logreg_max_iter", [&](auto& k, auto& v) { c.hyper.logreg_max_iter = as_count(k, v); }},
      {"classifiers.svm_lambda", [&](auto& k, auto& v) { c.hyper.svm_lambda = as_double(k, v); }},
      {"classifiers.svm_epochs", [&](auto& k, auto& v) { c.hyper.svm_epochs = as_count(k, v); }},
      {"classifiers.knn_k", [&](auto& k, auto& v) { c.hyper.knn_k = as_count(k, v); }},
      {"classifiers.rf_trees", [&](auto& k, auto& v) { c.hyper.rf_trees = as_count(k, v); }},
      {"classifiers.rf_max_features", [&](auto& k, auto& v) { c.hyper.rf_max_features = as_count(k, v); }},
      {"classifiers.rf_min_samples_leaf",
       [&](auto& k, auto& v) { c.hyper.rf_min_samples_leaf = as_count(k, v); }},
      {"neural.mode", [&](auto& k, auto& v) { c.mode = parse_input_mode(as_string(k, v)); }},
      {"neural.vote", [&](auto& k, auto& v) { c.vote = parse_vote_rule(as_string(k, v)); }},
      {"neural.embed_dim", [&](auto& k, auto& v) { c.neural.embed_dim = as_count(k, v); }},
      {"neural.hidden", [&](auto& k, auto& v) { c.neural.hidden = as_count(k, v); }},
      {"neural.max_len", [&](auto& k, auto& v) { c.neural.max_len = as_count(k, v); }},
      {"neural.epochs", [&](auto& k, auto& v) { c.neural.epochs = as_count(k, v); }},
      {"neural.batch", [&](auto& k, auto& v) { c.neural.batch = as_count(k, v); }},
      {"neural.lr", [&](auto& k, auto& v) { c.neural.lr = as_double(k, v); }},
      {"neural.min_freq", [&](auto& k, auto& v) { c.vocab_min_freq = static_cast<int>(as_count(k, v)); }},
      {"neural.seed",
       [&](auto& k, auto& v) {
         c.neural.seed = static_cast<std::uint64_t>(as_count(k, v));
         neural_seed_set = true;
       }},
  };

  for (const auto& [key, value] : doc) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw InputError("unknown config key '" + key + "'");
    it->second(key, value);
  }
  if (!split_seed_set) c.split.seed = c.seed;
  if (!neural_seed_set) c.neural.seed = c.seed;
  if (c.paths.output_dir.is_relative()) c.paths.output_dir = (base_dir / c.paths.output_dir).lexically_normal();
  c.hyper.rf_threads = std::max(1u, c.threads);
  try {
    c.split.validate();
    (void)Threshold(c.threshold);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  if (c.k < 1 || c.k > kMaxTitles) throw InputError("config: evidence.k must be in 1..10");
  for (const std::string& m : c.models) {
    if (m != "bilstm") (void)parse_classifier_kind(m);
  }
  return c;
}

namespace {

std::string quoted(std::string_view s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string render_config(const RunConfig& c) {
  std::ostringstream os;
  auto num = [](double v) { return format_double(v); };
  os << "seed = " << c.seed << "\n\n[paths]\n"
     << "corpus = " << quoted(c.paths.corpus.string()) << '\n'
     << "corpus_format = " << quoted(c.paths.corpus_format == CorpusFormat::vmu_tsv ? "vmu_tsv" : "fixture_jsonl")
     << '\n'
     << "evidence = " << quoted(c.paths.evidence.string()) << '\n'
     << "scores = " << quoted(c.paths.scores.string()) << '\n'
     << "doubt_lexicon = " << quoted(c.paths.doubt_lexicon.string()) << '\n'
     << "fake_lexicon = " << quoted(c.paths.fake_lexicon.string()) << '\n'
     << "replay_dir = " << quoted(c.paths.replay_dir.string()) << '\n'
     << "output_dir = " << quoted(c.paths.output_dir.string()) << "\n\n[evidence]\n"
     << "engine = " << quoted(to_string(c.engine)) << '\n'
     << "k = " << c.k << '\n'
     << "ttl_days = " << std::chrono::duration_cast<std::chrono::hours>(c.ttl).count() / 24 << '\n'
     << "max_attempts = " << c.max_attempts << '\n'
     << "requests_per_second = " << num(c.requests_per_second) << "\n\n[similarity]\n"
     << "scorer = " << quoted(to_string(c.scorer)) << '\n'
     << "threshold = " << num(c.threshold) << '\n'
     << "missing_pair = " << quoted(c.missing_pair == MissingPairPolicy::error ? "error" : "fallback_builtin")
     << "\n\n[features]\n"
     << "title_trace_reduce = " << quoted(c.title_trace_reduce == TitleTraceReduce::fraction ? "fraction" : "any")
     << '\n'
     << "threads = " << c.threads << "\n\n[split]\n"
     << "train = " << num(c.split.train_frac) << '\n'
     << "val = " << num(c.split.val_frac) << '\n'
     << "test = " << num(c.split.test_frac) << '\n'
     << "unit = " << quoted(c.split_unit == SplitUnit::post ? "post" : "image") << '\n'
     << "seed = " << c.split.seed << "\n\n[classifiers]\n"
     << "models = [";
  for (std::size_t i = 0; i < c.models.size(); ++i) os << (i ? ", " : "") << quoted(c.models[i]);
  const Hyperparameters& h = c.hyper;
  os << "]\n"
     << "standardize = " << (h.standardize ? "true" : "false") << '\n'
     << "logreg_l2 = " << num(h.logreg_l2) << '\n'
     << "logreg_lr = " << num(h.logreg_lr) << '\n'
     << "logreg_max_iter = " << h.logreg_max_iter << '\n'
     << "svm_lambda = " << num(h.svm_lambda) << '\n'
     << "svm_epochs = " << h.svm_epochs << '\n'
     << "knn_k = " << h.knn_k << '\n'
     << "rf_trees = " << h.rf_trees << '\n'
     << "rf_max_features = " << h.rf_max_features << '\n'
     << "rf_min_samples_leaf = " << h.rf_min_samples_leaf << "\n\n[neural]\n"
     << "mode = " << quoted(to_string(c.mode)) << '\n'
     << "vote = " << quoted(to_string(c.vote)) << '\n'
     << "embed_dim = " << c.neural.embed_dim << '\n'
     << "hidden = " << c.neural.hidden << '\n'
     << "max_len = " << c.neural.max_len << '\n'
     << "epochs = " << c.neural.epochs << '\n'
     << "batch = " << c.neural.batch << '\n'
     << "lr = " << num(c.neural.lr) << '\n'
     << "min_freq = " << c.vocab_min_freq << '\n'
     << "seed = " << c.neural.seed << '\n';
  return os.str();
}

}  // namespace veritrace
