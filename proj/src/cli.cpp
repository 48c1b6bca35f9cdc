#include "veritrace/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "veritrace/classifiers.hpp"
#include "veritrace/config.hpp"
#include "veritrace/corpus.hpp"
#include "veritrace/errors.hpp"
#include "veritrace/evidence.hpp"
#include "veritrace/features.hpp"
#include "veritrace/metrics.hpp"
#include "veritrace/neural.hpp"
#include "veritrace/search_client.hpp"
#include "veritrace/similarity.hpp"
#include "veritrace/strings.hpp"
#include "veritrace/textprep.hpp"
#include "veritrace/traces.hpp"

namespace veritrace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::string_view kNeuralModelName = "bilstm";

struct Session {
  RunConfig cfg;
  std::ostream& out;
  std::ostream& err;

  void log(const std::string& msg) const { err << "veritrace: " << msg << '\n'; }
  void report(const std::vector<Diagnostic>& diags, std::string_view what) const {
    for (const Diagnostic& d : diags) {
      err << "veritrace: warning: " << what;
      if (d.line) err << " line " << d.line;
      err << ": " << d.message << '\n';
    }
  }

  fs::path out_dir() const { return cfg.paths.output_dir; }
  fs::path models_dir() const { return out_dir() / "models"; }
  fs::path metrics_dir() const { return out_dir() / "metrics"; }
  fs::path features_path() const { return out_dir() / "features.csv"; }
  fs::path vocab_path() const { return models_dir() / "vocab.tsv"; }
  fs::path classic_model_path(ClassifierKind k) const {
    return models_dir() / (std::string(to_string(k)) + ".model.json");
  }
  fs::path neural_model_path() const {
    return models_dir() / ("bilstm_" + std::string(to_string(cfg.mode)) + ".model.json");
  }
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text_file(const fs::path& path, const std::string& text) {
  ensure_dir(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path.string());
  f << text;
}

void write_snapshot(const Session& s, std::string_view command) {
  std::string text = "# resolved configuration of the last `" + std::string(command) + "` run\n";
  text += render_config(s.cfg);
  write_text_file(s.out_dir() / "resolved_config.toml", text);
}

fs::path require_path(const fs::path& p, std::string_view key) {
  if (p.empty()) throw InputError("no " + std::string(key) + " configured (set it in the config file)");
  return p;
}

Corpus load_image_corpus(const Session& s, std::size_t* videos_dropped = nullptr) {
  const fs::path path = require_path(s.cfg.paths.corpus, "paths.corpus");
  CorpusLoadResult r = load_corpus(path, s.cfg.paths.corpus_format);
  s.report(r.diagnostics, path.string());
  Corpus images = filter_media(r.corpus, MediaKind::image);
  if (videos_dropped) *videos_dropped = r.corpus.size() - images.size();
  return images;
}

EvidenceStore load_evidence(const Session& s) {
  const fs::path path = require_path(s.cfg.paths.evidence, "paths.evidence");
  std::vector<Diagnostic> diags;
  EvidenceStore store = load_store(path, &diags);
  s.report(diags, path.string());
  return store;
}

std::unique_ptr<SimilarityScorer> make_scorer(const Session& s) {
  if (s.cfg.scorer == ScorerKind::lexical_builtin) return std::make_unique<LexicalScorer>();
  const fs::path path = require_path(s.cfg.paths.scores, "paths.scores");
  return std::make_unique<ExternalScoresScorer>(ExternalScoresScorer::load(path, s.cfg.missing_pair));
}

TraceMatcher make_matcher(const Session& s) {
  TraceLexicon lex = TraceLexicon::defaults();
  if (!s.cfg.paths.doubt_lexicon.empty()) lex.doubt_phrases = load_lexicon(s.cfg.paths.doubt_lexicon);
  if (!s.cfg.paths.fake_lexicon.empty()) lex.fake_phrases = load_lexicon(s.cfg.paths.fake_lexicon);
  return TraceMatcher(std::move(lex));
}

CorpusSplits make_splits(const Session& s, const Corpus& corpus) {
  CorpusSplits splits = stratified_split(corpus, s.cfg.split, s.cfg.split_unit);
  std::string text = "post_id\tsplit\n";
  auto add = [&](const Corpus& c, std::string_view name) {
    for (const Post& p : c.posts()) text += strings::escape_tsv(p.post_id) + "\t" + std::string(name) + "\n";
  };
  add(splits.train, "train");
  add(splits.validation, "validation");
  add(splits.test, "test");
  write_text_file(s.out_dir() / "split.tsv", text);
  return splits;
}

struct Selection {
  std::vector<ClassifierKind> classic;
  bool neural = false;
};

Selection selected_models(const Session& s) {
  Selection sel;
  for (const std::string& m : s.cfg.models) {
    if (m == kNeuralModelName) {
      sel.neural = true;
    } else {
      const ClassifierKind k = parse_classifier_kind(m);
      if (std::find(sel.classic.begin(), sel.classic.end(), k) == sel.classic.end()) sel.classic.push_back(k);
    }
  }
  return sel;
}

FeatureTable load_features(const Session& s) {
  std::ifstream in(s.features_path(), std::ios::binary);
  if (!in) {
    throw MissingArtifactError("feature file " + s.features_path().string() +
                               " not found; run `veritrace featurize` first");
  }
  return read_feature_csv(in);
}

// Rows of `table` for the posts of `part`, in `part` order.
void gather(const Session& s, const FeatureTable& table, const Corpus& part, Matrix& X, std::vector<int>& y,
            std::vector<std::string>* ids = nullptr) {
  std::map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < table.size(); ++i) index.emplace(table.post_ids[i], i);
  std::size_t missing = 0;
  for (const Post& p : part.posts()) {
    const auto it = index.find(p.post_id);
    if (it == index.end()) {
      ++missing;
      continue;
    }
    const auto v = table.rows[it->second].values();
    X.emplace_back(v.begin(), v.end());
    y.push_back(label_value(p.label));
    if (ids) ids->push_back(p.post_id);
  }
  if (missing) s.log(std::to_string(missing) + " posts have no feature row and were skipped");
}

// ---- ingest ----

struct IngestArgs {
  std::string input;
  std::string format;
  bool from_mediaeval = false;
  std::string write;
};

int cmd_ingest(Session& s, const IngestArgs& a) {
  if (!a.input.empty()) s.cfg.paths.corpus = a.input;
  if (!a.format.empty()) s.cfg.paths.corpus_format = parse_corpus_format(a.format);
  Corpus all;
  if (a.from_mediaeval) {
    const fs::path path = require_path(s.cfg.paths.corpus, "input");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read MediaEval file: " + path.string());
    CorpusLoadResult r = convert_mediaeval(in);
    s.report(r.diagnostics, path.string());
    all = std::move(r.corpus);
  } else {
    const fs::path path = require_path(s.cfg.paths.corpus, "paths.corpus");
    CorpusLoadResult r = load_corpus(path, s.cfg.paths.corpus_format);
    s.report(r.diagnostics, path.string());
    all = std::move(r.corpus);
  }
  const Corpus images = filter_media(all, MediaKind::image);
  s.out << format_summary(summarize(images));
  s.out << images.size() << " image posts kept, " << all.size() - images.size() << " video posts filtered\n";
  if (!a.write.empty()) {
    const CorpusFormat fmt = a.write.ends_with(".jsonl") ? CorpusFormat::fixture_jsonl : CorpusFormat::vmu_tsv;
    save_corpus(images, a.write, fmt);
    s.log("wrote " + a.write);
  }
  return kExitOk;
}

// ---- evidence ----

struct EvidenceArgs {
  std::string import_file;
  std::string store;
  std::string replay;
  bool live = false;
  std::string url_template;
  std::string images_dir;
  std::string now;
};

int cmd_evidence_import(Session& s, const EvidenceArgs& a) {
  if (!a.store.empty()) s.cfg.paths.evidence = a.store;
  const fs::path store_path = require_path(s.cfg.paths.evidence, "paths.evidence");
  EvidenceStore store;
  if (fs::exists(store_path)) store = load_evidence(s);
  const ImportResult r = import_records(store, fs::path(a.import_file));
  s.report(r.diagnostics, a.import_file);
  store.save(store_path);
  s.out << "imported " << r.accepted << " records; store " << store_path.string() << " holds " << store.size()
        << " records\n";
  return r.diagnostics.empty() ? kExitOk : kExitBadInput;
}

ImageQuery image_query(const EvidenceArgs& a, const Post& p) {
  ImageQuery q;
  q.image_id = p.image_id;
  if (!a.url_template.empty()) {
    q.url = a.url_template;
    const std::string token = "{image_id}";
    for (std::size_t at = q.url.find(token); at != std::string::npos; at = q.url.find(token)) {
      q.url.replace(at, token.size(), p.image_id);
    }
  } else if (!a.images_dir.empty()) {
    for (const char* ext : {".jpg", ".jpeg", ".png", ".gif", ""}) {
      std::ifstream in(fs::path(a.images_dir) / (p.image_id + ext), std::ios::binary);
      if (in) {
        std::ostringstream buf;
        buf << in.rdbuf();
        q.bytes = buf.str();
        break;
      }
    }
  }
  return q;
}

int cmd_evidence_fetch(Session& s, const EvidenceArgs& a) {
  if (!a.store.empty()) s.cfg.paths.evidence = a.store;
  if (!a.replay.empty()) s.cfg.paths.replay_dir = a.replay;
  const fs::path store_path = require_path(s.cfg.paths.evidence, "paths.evidence");

  std::unique_ptr<SearchClient> client;
  if (a.live) {
    LiveClientOptions opts;
    opts.requests_per_second = s.cfg.requests_per_second;
    client = make_live_client(s.cfg.engine, opts);
  } else {
    client = std::make_unique<ReplayClient>(s.cfg.engine, require_path(s.cfg.paths.replay_dir, "paths.replay_dir"));
  }

  const Corpus corpus = load_image_corpus(s);
  EvidenceStore store;
  if (fs::exists(store_path)) store = load_evidence(s);
  FetchOptions opts;
  opts.ttl = s.cfg.ttl;
  opts.max_attempts = s.cfg.max_attempts;
  if (!a.now.empty()) opts.now = parse_iso8601(a.now);

  std::size_t fetched = 0, cached = 0, failed = 0;
  std::vector<std::string> seen;
  for (const Post& p : corpus.posts()) {
    if (std::find(seen.begin(), seen.end(), p.image_id) != seen.end()) continue;
    seen.push_back(p.image_id);
    const auto before = store.find(p.image_id, s.cfg.engine);
    try {
      const EvidenceRecord rec = fetch_live(*client, store, image_query(a, p), opts);
      (before && *before == rec ? cached : fetched) += 1;
    } catch (const SearchError& e) {
      ++failed;
      s.log(std::string("warning: ") + e.what());
      if (e.kind() == SearchError::Kind::quota) {
        s.log("quota exhausted; stopping early");
        break;
      }
    }
  }
  store.save(store_path);
  s.out << "fetched " << fetched << " records, " << cached << " served from cache, " << failed
        << " failed; store " << store_path.string() << " holds " << store.size() << " records\n";
  return kExitOk;
}

// ---- featurize ----

int cmd_featurize(Session& s) {
  const Corpus corpus = load_image_corpus(s);
  const EvidenceStore store = load_evidence(s);
  const auto scorer = make_scorer(s);
  const TraceMatcher matcher = make_matcher(s);
  const FeatureContext ctx{store, s.cfg.engine, *scorer, matcher, Threshold(s.cfg.threshold), s.cfg.k,
                           s.cfg.title_trace_reduce};
  std::vector<Diagnostic> diags;
  const FeatureTable table = featurize_corpus(corpus, ctx, &diags, s.cfg.threads);
  s.report(diags, "corpus post");
  ensure_dir(s.out_dir());
  std::ostringstream csv;
  write_feature_csv(table, csv);
  write_text_file(s.features_path(), csv.str());
  const auto low = static_cast<std::size_t>(std::count(table.low_evidence.begin(), table.low_evidence.end(), true));
  s.out << "featurized " << table.size() << " posts (" << low << " low-evidence, " << diags.size()
        << " skipped) -> " << s.features_path().string() << '\n';
  write_snapshot(s, "featurize");
  return kExitOk;
}

// ---- train ----

std::vector<Instance> encoded_instances(const Session& s, const Corpus& part, const EvidenceStore& store,
                                        const Vocab& vocab) {
  std::vector<Instance> inst = build_instances(part, store, s.cfg.engine, s.cfg.mode, s.cfg.k);
  encode_instances(inst, vocab, s.cfg.neural.max_len);
  return inst;
}

ojson report_json(const TrainReport& r) {
  ojson j;
  j["initial_train_loss"] = r.initial_train_loss;
  j["best_epoch"] = r.best_epoch;
  j["used_validation"] = r.used_validation;
  ojson epochs = ojson::array();
  for (const EpochStats& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"train_accuracy", e.train_accuracy},
                      {"val_loss", e.val_loss},
                      {"val_accuracy", e.val_accuracy}});
  }
  j["epochs"] = std::move(epochs);
  return j;
}

void train_neural_model(Session& s, const CorpusSplits& splits) {
  const EvidenceStore store = load_evidence(s);
  std::vector<Instance> raw_train = build_instances(splits.train, store, s.cfg.engine, s.cfg.mode, s.cfg.k);
  std::vector<TokenStream> streams;
  streams.reserve(raw_train.size());
  for (const Instance& i : raw_train) streams.push_back(normalize(i.text));
  const Vocab vocab = build_vocab(streams, s.cfg.vocab_min_freq, s.cfg.neural.max_len);
  ensure_dir(s.models_dir());
  vocab.save(s.vocab_path());

  std::vector<Instance> train = encoded_instances(s, splits.train, store, vocab);
  std::vector<Instance> val = encoded_instances(s, splits.validation, store, vocab);
  NeuralConfig nc = s.cfg.neural;
  nc.vocab_size = vocab.size();
  s.log("training bilstm (" + std::string(to_string(s.cfg.mode)) + ") on " + std::to_string(train.size()) +
        " instances, vocab " + std::to_string(vocab.size()));
  NeuralTrainResult r = train_neural(train, val, nc);
  r.model.mode = s.cfg.mode;
  r.model.vocab_hash = vocab.content_hash();
  save_neural_model(r.model, s.neural_model_path());
  fs::path report_path = s.neural_model_path();
  report_path.replace_extension().replace_extension(".report.json");
  write_text_file(report_path, report_json(r.report).dump(1) + "\n");
  const EpochStats& best = r.report.epochs.at(r.report.best_epoch - 1);
  char line[200];
  std::snprintf(line, sizeof(line), "bilstm_%s: best epoch %zu, train loss %.4f, val loss %.4f -> %s\n",
                std::string(to_string(s.cfg.mode)).c_str(), r.report.best_epoch, best.train_loss, best.val_loss,
                s.neural_model_path().string().c_str());
  s.out << line;
}

int cmd_train(Session& s) {
  const Selection sel = selected_models(s);
  const Corpus corpus = load_image_corpus(s);
  const CorpusSplits splits = make_splits(s, corpus);
  if (!sel.classic.empty()) {
    const FeatureTable table = load_features(s);
    Matrix X;
    std::vector<int> y;
    gather(s, table, splits.train, X, y);
    ensure_dir(s.models_dir());
    const std::vector<std::string> names(kFeatureNames.begin(), kFeatureNames.end());
    for (ClassifierKind k : sel.classic) {
      const ClassicModel m = train(k, X, y, s.cfg.hyper, s.cfg.seed, names);
      save_model(m, s.classic_model_path(k));
      s.out << to_string(k) << ": trained on " << X.size() << " posts -> " << s.classic_model_path(k).string()
            << '\n';
    }
  }
  if (sel.neural) train_neural_model(s, splits);
  write_snapshot(s, "train");
  return kExitOk;
}

// ---- eval ----

MetricReport finish_report(MetricReport r, std::string model, std::string engine, std::string mode,
                           std::string level) {
  r.model = std::move(model);
  r.engine = std::move(engine);
  r.mode = std::move(mode);
  r.level = std::move(level);
  return r;
}

void eval_neural(Session& s, const CorpusSplits& splits) {
  const NeuralModel model = load_neural_model(s.neural_model_path());
  if (!fs::exists(s.vocab_path())) {
    throw MissingArtifactError("vocabulary " + s.vocab_path().string() + " not found; run `veritrace train` first");
  }
  const Vocab vocab = Vocab::load(s.vocab_path());
  check_vocab_matches(model, vocab);
  if (model.mode != s.cfg.mode) throw InputError("model was trained in a different input mode");
  const EvidenceStore store = load_evidence(s);
  const std::string engine(to_string(s.cfg.engine));
  const std::string mode(to_string(s.cfg.mode));

  const std::vector<Instance> inst = encoded_instances(s, splits.test, store, vocab);
  if (inst.empty()) throw InputError("the test split has no evidence titles to evaluate");
  std::vector<int> yt, yp;
  for (const Instance& i : inst) {
    yt.push_back(i.label);
    yp.push_back(forward(model, i.ids) >= 0.5 ? 1 : 0);
  }
  const MetricReport inst_report =
      finish_report(compute(confusion(yt, yp)), "bilstm", engine, mode, "instance");

  std::vector<int> pt, pp;
  std::size_t abstained = 0;
  for (const Post& p : splits.test.posts()) {
    const auto titles = get_titles(store, p.image_id, s.cfg.engine, s.cfg.k);
    const PostPrediction pred = predict_post(model, vocab, p.text, titles, s.cfg.vote);
    if (pred.abstained) {
      ++abstained;
      continue;
    }
    pt.push_back(label_value(p.label));
    pp.push_back(pred.label);
  }
  ojson j;
  j["instance"] = to_json(inst_report);
  s.out << "bilstm (" << mode << ", " << engine << ") instance level, " << inst.size() << " instances\n"
        << format_table(inst_report);
  if (!pt.empty()) {
    const MetricReport post_report = finish_report(compute(confusion(pt, pp)), "bilstm", engine, mode, "post");
    j["post"] = to_json(post_report);
    s.out << "bilstm (" << mode << ", " << engine << ") post level, " << pt.size() << " posts, vote "
          << to_string(s.cfg.vote) << '\n'
          << format_table(post_report);
  } else {
    j["post"] = nullptr;
  }
  j["post_abstained"] = abstained;
  ensure_dir(s.metrics_dir());
  write_text_file(s.metrics_dir() / ("bilstm_" + mode + ".json"), j.dump(1) + "\n");
}

int cmd_eval(Session& s) {
  const Selection sel = selected_models(s);
  const Corpus corpus = load_image_corpus(s);
  const CorpusSplits splits = make_splits(s, corpus);
  const std::string engine(to_string(s.cfg.engine));
  if (!sel.classic.empty()) {
    // Check every model file before doing any work so the error is immediate.
    for (ClassifierKind k : sel.classic) {
      if (!fs::exists(s.classic_model_path(k))) {
        throw MissingArtifactError("no trained model at " + s.classic_model_path(k).string() +
                                   "; run `veritrace train` first");
      }
    }
    const FeatureTable table = load_features(s);
    Matrix X;
    std::vector<int> y;
    gather(s, table, splits.test, X, y);
    if (X.empty()) throw InputError("the test split has no featurized posts");
    ensure_dir(s.metrics_dir());
    for (ClassifierKind k : sel.classic) {
      const ClassicModel m = load_model(s.classic_model_path(k));
      std::vector<int> pred;
      for (const Prediction& p : predict_all(m, X)) pred.push_back(p.label);
      const MetricReport r =
          finish_report(compute(confusion(y, pred)), std::string(to_string(k)), engine, "features", "post");
      write_text_file(s.metrics_dir() / (std::string(to_string(k)) + ".json"), to_json(r).dump(1) + "\n");
      s.out << to_string(k) << " (" << engine << "), " << X.size() << " test posts\n" << format_table(r);
    }
  }
  if (sel.neural) eval_neural(s, splits);
  write_snapshot(s, "eval");
  return kExitOk;
}

// ---- verify ----

struct VerifyArgs {
  std::string text;
  std::string image_id;
  std::vector<std::string> titles;
  std::string model_file;
};

int cmd_verify(Session& s, const VerifyArgs& a) {
  if (a.text.empty()) throw InputError("verify needs --text");
  if (a.image_id.empty() && a.titles.empty()) throw InputError("verify needs --image-id or --title");
  EvidenceStore store;
  if (a.titles.empty()) {
    store = load_evidence(s);
  } else {
    EvidenceRecord rec;
    rec.image_id = a.image_id.empty() ? "verify-image" : a.image_id;
    rec.engine = s.cfg.engine;
    rec.titles = normalize_titles(a.titles);
    store.upsert(rec);
  }
  Post post;
  post.post_id = "verify";
  post.text = a.text;
  post.image_id = a.image_id.empty() ? "verify-image" : a.image_id;
  post.media_kind = MediaKind::image;

  const auto scorer = make_scorer(s);
  const TraceMatcher matcher = make_matcher(s);
  const FeatureContext ctx{store, s.cfg.engine, *scorer, matcher, Threshold(s.cfg.threshold), s.cfg.k,
                           s.cfg.title_trace_reduce};
  const FeaturizedPost fp = featurize(post, ctx);

  auto phrases = [](const std::vector<std::string>& v) { return v.empty() ? std::string("-") : strings::join(v, ", "); };
  std::ostream& o = s.out;
  o << "image: " << post.image_id << " (" << to_string(s.cfg.engine) << ")\n";
  o << "query traces: uns=" << fp.query_traces.uns << " db=" << fp.query_traces.db
    << " matched: " << phrases(fp.query_traces.matched_phrases) << '\n';
  const FeatureVector& f = fp.features;
  o << "features: uns_query=" << strings::format_g9(f.uns_query) << " uns_titles=" << strings::format_g9(f.uns_titles)
    << " db_query=" << strings::format_g9(f.db_query) << " db_titles=" << strings::format_g9(f.db_titles)
    << " s=" << strings::format_g9(f.s) << (fp.low_evidence ? " (low evidence)" : "") << '\n';
  o << "titles:\n";
  for (std::size_t i = 0; i < fp.similarity.titles.size(); ++i) {
    const TitleAssessment& t = fp.similarity.titles[i];
    o << "  [" << i + 1 << "] case=" << to_string(t.outcome) << " score=" << strings::format_g9(t.score)
      << " uns=" << t.traces.uns << " db=" << t.traces.db << " matched: " << phrases(t.traces.matched_phrases)
      << " | " << t.title << '\n';
  }

  const std::string model_name = s.cfg.models.empty() ? std::string("random_forest") : s.cfg.models.front();
  int label = 0;
  double score = 0.0;
  std::string used;
  if (model_name == kNeuralModelName && a.model_file.empty()) {
    const NeuralModel model = load_neural_model(s.neural_model_path());
    const Vocab vocab = Vocab::load(s.vocab_path());
    check_vocab_matches(model, vocab);
    const auto titles = get_titles(store, post.image_id, s.cfg.engine, s.cfg.k);
    const PostPrediction pred = predict_post(model, vocab, post.text, titles, s.cfg.vote);
    if (pred.abstained) {
      o << "model: bilstm abstains (no evidence titles), score 0.5\n";
      return kExitOk;
    }
    label = pred.label;
    score = pred.score;
    used = s.neural_model_path().string();
  } else {
    const fs::path path =
        a.model_file.empty() ? s.classic_model_path(parse_classifier_kind(model_name)) : fs::path(a.model_file);
    if (!fs::exists(path)) {
      throw MissingArtifactError("no trained model at " + path.string() + "; run `veritrace train` first");
    }
    const ClassicModel m = load_model(path);
    const auto v = f.values();
    const Prediction p = predict(m, v);
    label = p.label;
    score = p.score;
    used = path.string();
  }
  o << "model: " << used << '\n';
  o << "label: " << (label == 1 ? "fake" : "real") << " score: " << strings::format_g9(score) << '\n';
  return kExitOk;
}

RunConfig build_config(const std::string& config_path) {
  if (config_path.empty()) return resolve_config({}, fs::current_path());
  const fs::path p(config_path);
  if (!fs::exists(p)) throw InputError("config file not found: " + p.string());
  const fs::path base = p.has_parent_path() ? p.parent_path() : fs::path(".");
  return resolve_config(load_config_file(p), base);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Verify social-media image posts against reverse-image-search evidence"};
  app.name("veritrace");
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, engine, mode, model, output_dir;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "TOML config file");
  auto* seed_opt = app.add_option("--seed", seed, "Seed for splits and training");
  app.add_option("--engine", engine, "bing_visual | google_images | fixture");
  app.add_option("--mode", mode, "Neural input mode: image_only | tweet_plus_image");
  app.add_option("--model", model, "Model to train/evaluate/use: a classifier kind or bilstm");
  app.add_option("--output-dir", output_dir, "Overrides paths.output_dir");

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "Load a corpus, drop video posts, print per-event counts");
  ingest->add_option("--input", ingest_args.input, "Corpus file (overrides paths.corpus)");
  ingest->add_option("--format", ingest_args.format, "vmu_tsv | fixture_jsonl");
  ingest->add_flag("--from-mediaeval", ingest_args.from_mediaeval, "Input is the upstream MediaEval tweets file");
  ingest->add_option("--write", ingest_args.write, "Write the image-only corpus here (.jsonl or .tsv)");

  EvidenceArgs ev_args;
  auto* evidence = app.add_subcommand("evidence", "Manage the evidence store");
  evidence->require_subcommand(1);
  auto* ev_import = evidence->add_subcommand("import", "Import JSONL evidence records");
  ev_import->add_option("file", ev_args.import_file, "JSONL file")->required();
  ev_import->add_option("--store", ev_args.store, "Store file (overrides paths.evidence)");
  auto* ev_fetch = evidence->add_subcommand("fetch", "Fetch titles for every corpus image");
  ev_fetch->add_option("--store", ev_args.store, "Store file (overrides paths.evidence)");
  ev_fetch->add_option("--replay", ev_args.replay, "Replay directory (overrides paths.replay_dir)");
  ev_fetch->add_flag("--live", ev_args.live, "Query the live search API (needs credentials)");
  ev_fetch->add_option("--url-template", ev_args.url_template, "Image URL with {image_id} placeholder");
  ev_fetch->add_option("--images-dir", ev_args.images_dir, "Directory of <image_id>.<ext> files to upload");
  ev_fetch->add_option("--now", ev_args.now, "Clock reading for cache decisions (ISO 8601)");

  auto* featurize_cmd = app.add_subcommand("featurize", "Compute the five features per post");
  auto* train_cmd = app.add_subcommand("train", "Train the configured models on the train split");
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate trained models on the test split");

  VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify", "Classify one post and explain the evidence");
  verify->add_option("--text", verify_args.text, "Post text")->required();
  verify->add_option("--image-id", verify_args.image_id, "Image id to look up in the evidence store");
  verify->add_option("--title", verify_args.titles, "Evidence title (repeatable; bypasses the store)");
  verify->add_option("--model-file", verify_args.model_file, "Classic model file to use");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitBadInput;
  }

  try {
    RunConfig cfg = build_config(config_path);
    if (seed_opt->count()) {
      cfg.seed = seed;
      cfg.split.seed = seed;
      cfg.neural.seed = seed;
    }
    if (!engine.empty()) cfg.engine = parse_engine(engine);
    if (!mode.empty()) cfg.mode = parse_input_mode(mode);
    if (!model.empty()) {
      if (model != kNeuralModelName) (void)parse_classifier_kind(model);
      cfg.models = {model};
    }
    if (!output_dir.empty()) cfg.paths.output_dir = output_dir;

    Session s{std::move(cfg), out, err};
    if (ingest->parsed()) return cmd_ingest(s, ingest_args);
    if (ev_import->parsed()) return cmd_evidence_import(s, ev_args);
    if (ev_fetch->parsed()) return cmd_evidence_fetch(s, ev_args);
    if (featurize_cmd->parsed()) return cmd_featurize(s);
    if (train_cmd->parsed()) return cmd_train(s);
    if (eval_cmd->parsed()) return cmd_eval(s);
    if (verify->parsed()) return cmd_verify(s, verify_args);
    err << "veritrace: no command given\n";
    return kExitBadInput;
  } catch (const MissingArtifactError& e) {
    err << "veritrace: error: " << e.what() << '\n';
    return kExitMissingArtifact;
  } catch (const InputError& e) {
    err << "veritrace: error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::exception& e) {
    err << "veritrace: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace veritrace
