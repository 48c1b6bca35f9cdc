// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "classifier_data.hpp"
#include "neural_data.hpp"
#include "oracles.hpp"
#include "test_support.hpp"
#include "veritrace/classifiers.hpp"
#include "veritrace/cli.hpp"
#include "veritrace/evidence.hpp"
#include "veritrace/metrics.hpp"
#include "veritrace/neural.hpp"
#include "veritrace/random.hpp"
#include "veritrace/similarity.hpp"
#include "veritrace/synth.hpp"
#include "veritrace/traces.hpp"

namespace fs = std::filesystem;
using namespace veritrace;
using testutil::TempDir;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail.clear();
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

struct Criterion {
  const char* id;
  const char* title;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

struct CliRun {
  int code = -1;
  std::string out, err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

// ---------------------------------------------------------------------------

Outcome lexicon_self_test() {
  Outcome o;
  const auto lex = TraceLexicon::load(testutil::data_dir() / "lexicon/doubt.lex",
                                      testutil::data_dir() / "lexicon/fake.lex");
  const TraceMatcher matcher(lex);
  std::size_t checked = 0;
  auto fires = [&](const std::string& phrase, bool doubt) {
    const auto r = matcher.detect("the weather " + phrase + " today");
    ++checked;
    const bool hit = std::find(r.matched_phrases.begin(), r.matched_phrases.end(), phrase) != r.matched_phrases.end();
    o.require(hit && (doubt ? r.db : r.uns) == 1, "\"" + phrase + "\" did not fire");
  };
  for (const auto& p : lex.doubt_phrases) fires(p, true);
  for (const auto& p : lex.fake_phrases) fires(p, false);
  o.require(matcher.detect("the weather today").db == 0 && matcher.detect("the weather today").uns == 0,
            "neutral carrier fired");
  if (o.pass) o.detail = std::to_string(checked) + " phrases fire their flag";
  return o;
}

Outcome uncertainty_exhaustive() {
  Outcome o;
  std::vector<int> got;
  for (int db : {0, 1})
    for (int uns : {0, 1}) got.push_back(uncertainty_score(db, uns));
  o.require(got == std::vector<int>{0, 1, 1, 2}, "unexpected scores");
  o.detail = "(0,0)=" + std::to_string(got[0]) + " (0,1)=" + std::to_string(got[1]) +
             " (1,0)=" + std::to_string(got[2]) + " (1,1)=" + std::to_string(got[3]);
  return o;
}

Outcome case_engine() {
  Outcome o;
  const auto scorer = ExternalScoresScorer::load(testutil::fixture("mh370/scores.tsv"), MissingPairPolicy::error);
  const auto corpus = load_corpus(testutil::fixture("mh370/corpus.tsv"), CorpusFormat::vmu_tsv).corpus;
  const auto store = load_store(testutil::fixture("mh370/evidence.jsonl"));
  const Post& post = corpus.posts().front();
  const auto titles = get_titles(store, post.image_id, Engine::bing_visual, kMaxTitles);
  TraceLexicon lexicon = TraceLexicon::defaults();
  lexicon.fake_phrases = load_lexicon(testutil::fixture("mh370/fake.lex"));
  const TraceMatcher matcher(lexicon);

  const auto summary = aggregate_post(scorer, post.text, titles, matcher);
  o.require(summary.titles.size() == 2, "expected two evidence titles");
  if (!o.pass) return o;
  const auto& a = summary.titles[0];
  const auto& b = summary.titles[1];
  const int uq = matcher.detect(post.text).uns;
  o.require(a.score == 1.03 && uq == 1 && a.traces.uns == 0, "first pair is not (1.03, 1, 0)");
  o.require(a.outcome == SimilarityCase::context_mismatch, "1.03 pair not a context mismatch");
  o.require(b.score == 2.125 && b.traces.uns == 1, "second pair is not (2.125, 1, 1)");
  o.require(b.outcome == SimilarityCase::both_fake, "2.125 pair not both_fake");

  o.require(classify_case(1.3, 1, 1) == SimilarityCase::both_fake, "1.3 with both flags");
  o.require(classify_case(1.3, 0, 0) == SimilarityCase::no_fake_signal, "1.3 without flags");
  o.require(classify_case(std::nextafter(1.3, 0.0), 1, 1) == SimilarityCase::context_mismatch, "just below 1.3");
  if (o.pass)
    o.detail = "1.03 -> " + std::string(to_string(a.outcome)) + ", 2.125 -> " + std::string(to_string(b.outcome)) +
               ", 1.3 -> same-context branch";
  return o;
}

Outcome classifier_oracles() {
  Outcome o;
  using testutil::sample_data;

  std::size_t knn_queries = 0;
  for (bool coarse : {false, true}) {
    const auto train_set = sample_data(200, coarse ? 21 : 22, coarse);
    const auto queries = sample_data(200, 99, coarse);
    for (std::size_t k : {1u, 3u, 5u}) {
      Hyperparameters h;
      h.knn_k = k;
      const auto model = train(ClassifierKind::knn, train_set.X, train_set.y, h);
      for (const auto& q : queries.X) {
        ++knn_queries;
        if (predict(model, q).label != oracle::knn_label(train_set.X, train_set.y, k, true, q))
          o.require(false, "kNN disagrees with the full scan");
      }
    }
  }

  const auto nb = testutil::nb_fixture();
  const Hyperparameters h;
  const auto nb_model = train(ClassifierKind::naive_bayes, nb.X, nb.y, h);
  Rng rng(17);
  std::size_t nb_queries = 0;
  for (int i = 0; i < 500; ++i) {
    Row q{static_cast<double>(rng.bernoulli(0.5)), rng.uniform(0, 1), static_cast<double>(rng.bernoulli(0.5)),
          rng.uniform(0, 0.5), rng.uniform(0, 5)};
    ++nb_queries;
    if (predict(nb_model, q).label != oracle::naive_bayes_label(nb.X, nb.y, h.nb_var_floor, q))
      o.require(false, "naive Bayes disagrees with the enumerated posterior");
  }
  for (std::size_t i = 0; i < nb.X.size(); ++i)
    if (predict(nb_model, nb.X[i]).label != oracle::naive_bayes_label(nb.X, nb.y, h.nb_var_floor, nb.X[i]))
      o.require(false, "naive Bayes disagrees on a fixture point");

  std::size_t splits = 0;
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    Rng r(seed);
    const std::size_t n = 2 + r.uniform_index(19);
    const auto d = sample_data(n, seed + 500, seed % 2 == 1);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    const std::vector<int> feats{0, 1, 2, 3, 4};
    const auto got = find_best_split(d.X, d.y, idx, feats);
    const auto want = oracle::best_split(d.X, d.y, idx, feats);
    ++splits;
    if (got.found != want.found || (got.found && (got.feature != want.feature || got.threshold != want.threshold)))
      o.require(false, "split differs from the exhaustive search (seed " + std::to_string(seed) + ")");
  }

  double worst = 0.0;
  for (ClassifierKind kind : {ClassifierKind::logreg, ClassifierKind::linear_svm}) {
    const bool logistic = kind == ClassifierKind::logreg;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto d = sample_data(40, seed, false);
      Rng r(seed + 100);
      LinearParams p;
      for (int j = 0; j < 5; ++j) p.w.push_back(r.uniform(-1, 1));
      p.b = r.uniform(-1, 1);
      const double lambda = logistic ? h.logreg_l2 : h.svm_lambda;
      std::vector<double> theta = p.w;
      theta.push_back(p.b);
      const auto fd = oracle::central_difference(
          [&](const std::vector<long double>& t) { return oracle::linear_objective(logistic, t, d.X, d.y, lambda); },
          theta, 1e-6L);
      worst = std::max(worst, oracle::max_relative_error(loss_gradient(kind, p, d.X, d.y, h), fd));
    }
  }
  o.require(worst <= 1e-5, "gradient relative error " + fmt(worst));
  if (o.pass)
    o.detail = "kNN " + std::to_string(knn_queries) + " queries, NB " + std::to_string(nb_queries + nb.X.size()) +
               " queries, " + std::to_string(splits) + " splits exact; gradient rel err " + fmt(worst);
  return o;
}

Outcome neural_verification() {
  Outcome o;
  using namespace testutil;
  double worst = 0.0;
  Rng rng(11);
  for (int draw = 0; draw < 20; ++draw) {
    auto c = small_config();
    c.seed = 1000 + static_cast<std::uint64_t>(draw);
    c.init_range = 0.3;
    const auto ids = random_ids(rng, c.vocab_size, c.max_len);
    worst = std::max(worst, gradient_check(init_model(c), ids, draw % 2, 1e-5, 200,
                                           static_cast<std::uint64_t>(draw)).max_rel_error);
  }
  o.require(worst <= 1e-4, "gradient check " + fmt(worst));

  auto mc = small_config();
  mc.init_range = 0.3;
  const double mutant = gradient_check(init_model(mc), padded({2, 3, 4, 5, 6}, 8), 1, 1e-5, 200, 1,
                                       GradientFault::zero_forget_gate)
                            .max_rel_error;
  o.require(mutant > 1e-2, "forget-gate mutant passed the check (" + fmt(mutant) + ")");

  auto tc = small_config(10, 6);
  tc.embed_dim = 8;
  tc.hidden = 8;
  tc.epochs = 200;
  tc.batch = 4;
  tc.lr = 0.01;
  const auto toy = toy_set(tc.max_len);
  const auto start = std::chrono::steady_clock::now();
  const auto trained = train_neural(toy, {}, tc);
  const double toy_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::size_t first_perfect = 0;
  for (const auto& e : trained.report.epochs)
    if (e.train_accuracy == 1.0) {
      first_perfect = e.epoch;
      break;
    }
  o.require(first_perfect != 0, "toy set never reached full training accuracy");
  o.require(toy_s < 60.0, "toy training took " + fmt(toy_s) + " s");

  Rng prop(5);
  for (int i = 0; i < 20; ++i) {
    auto c = small_config(12, 6);
    c.seed = 100 + static_cast<std::uint64_t>(i);
    c.init_range = 0.5;
    const auto m = init_model(c);
    NeuralModel longer = m;
    longer.config.max_len = 11;
    const auto ids = random_ids(prop, c.vocab_size, c.max_len);
    if (forward(longer, padded(ids, 11)) != forward(m, ids)) o.require(false, "padding changed the output");
    const auto end = std::find(ids.begin(), ids.end(), Vocab::kPad);
    std::vector<TokenId> rev(ids.begin(), end);
    std::reverse(rev.begin(), rev.end());
    if (std::abs(forward(mirrored(m), padded(rev, c.max_len)) - forward(m, ids)) > 1e-15)
      o.require(false, "mirrored model on reversed input differs");
  }
  if (o.pass)
    o.detail = "grad rel err " + fmt(worst) + ", mutant " + fmt(mutant) + ", toy 100% at epoch " +
               std::to_string(first_perfect) + " (" + fmt(toy_s) + " s), padding and symmetry hold";
  return o;
}

Outcome metrics_closed_form() {
  Outcome o;
  const auto r = compute(ConfusionMatrix{90, 10, 10, 90});
  for (const auto* m : {&r.fake, &r.real, &r.weighted}) {
    o.require(std::abs(m->precision - 0.9) < 1e-12, "precision");
    o.require(std::abs(m->recall - 0.9) < 1e-12, "recall");
    o.require(std::abs(m->f1 - 0.9) < 1e-12, "f1");
    o.require(std::abs(m->fp_rate - 0.1) < 1e-12, "fp_rate");
  }
  o.require(std::abs(r.accuracy - 0.9) < 1e-12, "accuracy");
  if (o.pass) o.detail = "precision = recall = f1 = accuracy = 0.9, fp_rate = 0.1";
  return o;
}

Outcome planted_experiment() {
  Outcome o;
  const TempDir dir;
  const SynthSpec spec;
  const auto data = generate_planted(spec);
  save_corpus(data.corpus, dir / "corpus.tsv", CorpusFormat::vmu_tsv);
  data.store.save(dir / "evidence.jsonl");
  {
    std::ofstream scores(dir / "scores.tsv", std::ios::binary);
    data.scores.write(scores);
  }
  testutil::write_file(dir / "veritrace.toml",
                       "seed = 7\n[paths]\ncorpus = \"corpus.tsv\"\nevidence = \"evidence.jsonl\"\n"
                       "scores = \"scores.tsv\"\noutput_dir = \"out\"\n[similarity]\nscorer = \"external_file\"\n"
                       "[neural]\nmode = \"tweet_plus_image\"\n");
  const std::string cfg = (dir / "veritrace.toml").string();

  auto step = [&](std::vector<std::string> args) {
    std::vector<std::string> full{"--config", cfg};
    full.insert(full.end(), args.begin(), args.end());
    const auto r = cli(full);
    o.require(r.code == kExitOk, "`" + args.back() + "` exited " + std::to_string(r.code) + ": " + r.err);
    return r.code == kExitOk;
  };
  if (!step({"featurize"})) return o;
  std::string detail = std::to_string(data.corpus.size()) + " posts;";
  for (const char* model : {"random_forest", "logreg"}) {
    if (!step({"--model", model, "train"}) || !step({"--model", model, "eval"})) return o;
    const double f1 = read_json(dir / "out/metrics" / (std::string(model) + ".json"))["fake"]["f1"];
    o.require(f1 >= 0.9, std::string(model) + " F1 " + fmt(f1));
    detail += std::string(" ") + model + " F1 " + fmt(f1) + ",";
  }
  if (!step({"--model", "bilstm", "train"}) || !step({"--model", "bilstm", "eval"})) return o;
  const double f1 = read_json(dir / "out/metrics/bilstm_tweet_plus_image.json")["instance"]["fake"]["f1"];
  o.require(f1 >= 0.9, "Bi-LSTM mode B instance F1 " + fmt(f1));
  if (o.pass) o.detail = detail + " Bi-LSTM mode B instance F1 " + fmt(f1);
  return o;
}

Outcome determinism() {
  Outcome o;
  const TempDir a, b;
  const std::string cfg = testutil::fixture("demo/veritrace.toml").string();
  const std::vector<std::string> models{"random_forest", "logreg", "bilstm"};
  for (const TempDir* d : {&a, &b}) {
    const std::string out = d->path().string();
    o.require(cli({"--config", cfg, "--seed", "7", "--output-dir", out, "featurize"}).code == kExitOk, "featurize");
    for (const auto& m : models)
      for (const char* cmd : {"train", "eval"})
        o.require(cli({"--config", cfg, "--seed", "7", "--output-dir", out, "--model", m, cmd}).code == kExitOk,
                  m + " " + cmd);
  }
  if (!o.pass) return o;
  std::size_t compared = 0;
  for (const char* sub : {"models", "metrics"})
    for (const auto& entry : fs::directory_iterator(a / sub)) {
      const fs::path other = b / sub / entry.path().filename();
      ++compared;
      o.require(fs::exists(other) && testutil::read_file(entry.path()) == testutil::read_file(other),
                entry.path().filename().string() + " differs");
    }
  if (o.pass) o.detail = std::to_string(compared) + " model and metrics files byte-identical across two runs";
  return o;
}

Outcome external_inputs_path() {
  Outcome o;
  std::cout << "  note: the reported F1 of 0.978 for random forest and SVM, 0.99 for the tweet+image Bi-LSTM,\n"
               "  and the Bing 0.93 vs Google 0.85 comparison are NOT reproducible here. They depend on\n"
               "  2015-era live reverse image search results and a fine-tuned similarity model that are not\n"
               "  available. The harness reproduces the procedure on fixtures and accepts a user-supplied\n"
               "  evidence store and scores file to rerun the original experiment.\n";
  const TempDir dir;
  const std::string demo = testutil::fixture("demo/veritrace.toml").string();
  o.require(cli({"--config", demo, "--output-dir", dir.path().string(), "featurize"}).code == kExitOk, "featurize");
  o.require(cli({"--config", demo, "--output-dir", dir.path().string(), "--model", "random_forest", "train"}).code ==
                kExitOk,
            "train");
  if (!o.pass) return o;
  const auto r = cli({"--config", testutil::fixture("mh370/veritrace.toml").string(), "--output-dir",
                      (dir / "mh370").string(), "verify", "--image-id", "malaysia_sicily_1", "--text",
                      "This image is NOT MH370, this is an image from the incident of a plane crashed in Sicily on "
                      "6Ogos2005 #PrayForMH370",
                      "--model-file", (dir / "models/random_forest.model.json").string()});
  o.require(r.code == kExitOk, "verify exited " + std::to_string(r.code) + ": " + r.err);
  o.require(r.out.find("both_fake") != std::string::npos && r.out.find("2.125") != std::string::npos,
            "verify did not use the supplied scores");
  if (o.pass) o.detail = "external evidence store and scores file drive verify (s = 2.125, both_fake)";
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"AC1", "lexicon self-test", 1.0, lexicon_self_test},
      {"AC2", "uncertainty score", 1.0, uncertainty_exhaustive},
      {"AC3", "similarity case engine", 1.0, case_engine},
      {"AC4", "classifier oracles", 30.0, classifier_oracles},
      {"AC5", "neural verification", 60.0, neural_verification},
      {"AC6", "metrics closed form", 1.0, metrics_closed_form},
      {"AC7", "planted-signal experiment", 300.0, planted_experiment},
      {"AC8", "determinism", 300.0, determinism},
      {"AC9", "desk-scale limits stated", 60.0, external_inputs_path},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (s > c.budget_s) o.require(false, "took " + fmt(s) + " s, budget " + fmt(c.budget_s) + " s");
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.id << ' ' << c.title << ": " << o.detail << " [" << fmt(s)
              << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
