#include "veritrace/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "veritrace/errors.hpp"
#include "veritrace/random.hpp"

namespace veritrace {

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::logreg: return "logreg";
    case ClassifierKind::naive_bayes: return "naive_bayes";
    case ClassifierKind::linear_svm: return "linear_svm";
    case ClassifierKind::knn: return "knn";
    case ClassifierKind::random_forest: return "random_forest";
  }
  return "?";
}

ClassifierKind parse_classifier_kind(std::string_view s) {
  for (ClassifierKind k : kAllClassifiers) {
    if (to_string(k) == s) return k;
  }
  if (s == "rf") return ClassifierKind::random_forest;
  if (s == "svm") return ClassifierKind::linear_svm;
  if (s == "nb") return ClassifierKind::naive_bayes;
  throw InputError("unknown classifier kind '" + std::string(s) + "'");
}

Standardizer Standardizer::fit(const Matrix& X) {
  Standardizer st;
  if (X.empty()) return st;
  const std::size_t d = X.front().size();
  const double n = static_cast<double>(X.size());
  st.mean.assign(d, 0.0);
  st.scale.assign(d, 0.0);
  for (const Row& r : X) {
    for (std::size_t j = 0; j < d; ++j) st.mean[j] += r[j];
  }
  for (double& m : st.mean) m /= n;
  for (const Row& r : X) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dv = r[j] - st.mean[j];
      st.scale[j] += dv * dv;
    }
  }
  for (double& s : st.scale) {
    s = std::sqrt(s / n);
    if (!(s > 1e-12)) s = 1.0;
  }
  return st;
}

Row Standardizer::apply(std::span<const double> x) const {
  Row out(x.begin(), x.end());
  for (std::size_t j = 0; j < out.size() && j < mean.size(); ++j) {
    out[j] = (out[j] - mean[j]) / scale[j];
  }
  return out;
}

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) {
  if (z > 0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::size_t validate_data(const Matrix& X, std::span<const int> y) {
  if (X.empty()) throw InputError("training data is empty");
  if (X.size() != y.size()) throw InputError("feature rows and labels differ in length");
  const std::size_t d = X.front().size();
  if (d == 0) throw InputError("training data has no features");
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (X[i].size() != d) throw InputError("ragged feature matrix at row " + std::to_string(i));
    for (double v : X[i]) {
      if (!std::isfinite(v)) throw InputError("non-finite feature at row " + std::to_string(i));
    }
    if (y[i] != 0 && y[i] != 1) throw InputError("label must be 0 or 1 at row " + std::to_string(i));
  }
  return d;
}

bool both_classes(std::span<const int> y) {
  bool has0 = false, has1 = false;
  for (int v : y) (v == 1 ? has1 : has0) = true;
  return has0 && has1;
}

void check_linear_kind(ClassifierKind kind) {
  if (kind != ClassifierKind::logreg && kind != ClassifierKind::linear_svm) {
    throw std::invalid_argument("loss is defined for logreg and linear_svm only, not " +
                                std::string(to_string(kind)));
  }
}

LinearParams train_logreg(const Matrix& X, std::span<const int> y, const Hyperparameters& h) {
  const std::size_t d = X.front().size();
  LinearParams p;
  p.w.assign(d, 0.0);
  double lr = h.logreg_lr;
  double loss = loss_value(ClassifierKind::logreg, p, X, y, h);
  p.loss_history.push_back(loss);
  for (std::size_t it = 0; it < h.logreg_max_iter; ++it) {
    const Row g = loss_gradient(ClassifierKind::logreg, p, X, y, h);
    if (std::sqrt(dot(g, g)) < h.logreg_grad_tol) break;
    // Halve the step until the loss does not increase.
    while (true) {
      LinearParams next = p;
      for (std::size_t j = 0; j < d; ++j) next.w[j] -= lr * g[j];
      next.b -= lr * g[d];
      const double next_loss = loss_value(ClassifierKind::logreg, next, X, y, h);
      if (next_loss <= loss) {
        p.w = std::move(next.w);
        p.b = next.b;
        loss = next_loss;
        break;
      }
      lr *= 0.5;
      if (lr < 1e-14) break;
    }
    if (lr < 1e-14) break;
    p.loss_history.push_back(loss);
    p.iterations = it + 1;
  }
  return p;
}

LinearParams train_svm(const Matrix& X, std::span<const int> y, const Hyperparameters& h,
                       std::uint64_t seed) {
  const std::size_t n = X.size(), d = X.front().size();
  const double lambda = h.svm_lambda;
  if (!(lambda > 0)) throw InputError("svm_lambda must be positive");
  LinearParams p;
  p.w.assign(d, 0.0);
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t t = 0;
  for (std::size_t epoch = 0; epoch < h.svm_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double yi = y[i] == 1 ? 1.0 : -1.0;
      const double margin = yi * (dot(p.w, X[i]) + p.b);
      const double shrink = 1.0 - eta * lambda;
      for (double& wj : p.w) wj *= shrink;
      if (margin < 1.0) {
        for (std::size_t j = 0; j < d; ++j) p.w[j] += eta * yi * X[i][j];
        p.b += eta * yi;
      }
    }
  }
  p.iterations = t;
  return p;
}

NaiveBayesParams train_nb(const Matrix& X, std::span<const int> y, const Hyperparameters& h) {
  const std::size_t d = X.front().size();
  NaiveBayesParams p;
  std::size_t count[2] = {0, 0};
  for (int c = 0; c < 2; ++c) {
    p.mean[c].assign(d, 0.0);
    p.var[c].assign(d, 0.0);
  }
  for (std::size_t i = 0; i < X.size(); ++i) {
    ++count[y[i]];
    for (std::size_t j = 0; j < d; ++j) p.mean[y[i]][j] += X[i][j];
  }
  for (int c = 0; c < 2; ++c) {
    for (double& m : p.mean[c]) m /= static_cast<double>(count[c]);
  }
  for (std::size_t i = 0; i < X.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dv = X[i][j] - p.mean[y[i]][j];
      p.var[y[i]][j] += dv * dv;
    }
  }
  for (int c = 0; c < 2; ++c) {
    for (double& v : p.var[c]) v = std::max(v / static_cast<double>(count[c]), h.nb_var_floor);
    p.log_prior[c] = std::log(static_cast<double>(count[c]) / static_cast<double>(X.size()));
  }
  return p;
}

ForestParams train_forest(const Matrix& X, std::span<const int> y, const Hyperparameters& h,
                          std::uint64_t seed) {
  if (h.rf_trees == 0) throw InputError("rf_trees must be positive");
  const std::size_t n = X.size();
  ForestParams forest;
  forest.trees.resize(h.rf_trees);
  const TreeOptions opts{h.rf_max_features, std::max<std::size_t>(1, h.rf_min_samples_leaf)};

  auto grow = [&](std::size_t t) {
    const std::uint64_t tree_seed = seed + t;
    Rng rng(tree_seed);
    std::vector<std::size_t> sample(n);
    for (std::size_t& s : sample) s = rng.uniform_index(n);
    forest.trees[t] = grow_tree(X, y, sample, opts, rng);
    forest.trees[t].seed = tree_seed;
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(h.rf_threads, h.rf_trees));
  if (threads == 1) {
    for (std::size_t t = 0; t < h.rf_trees; ++t) grow(t);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < h.rf_trees; t += threads) grow(t);
      });
    }
  }
  return forest;
}

}  // namespace

double loss_value(ClassifierKind kind, const LinearParams& p, const Matrix& X,
                  std::span<const int> y, const Hyperparameters& h) {
  check_linear_kind(kind);
  double data = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double z = dot(p.w, X[i]) + p.b;
    if (kind == ClassifierKind::logreg) {
      data += softplus(z) - (y[i] == 1 ? z : 0.0);
    } else {
      const double yi = y[i] == 1 ? 1.0 : -1.0;
      data += std::max(0.0, 1.0 - yi * z);
    }
  }
  const double lambda = kind == ClassifierKind::logreg ? h.logreg_l2 : h.svm_lambda;
  return data / static_cast<double>(X.size()) + 0.5 * lambda * dot(p.w, p.w);
}

Row loss_gradient(ClassifierKind kind, const LinearParams& p, const Matrix& X,
                  std::span<const int> y, const Hyperparameters& h) {
  check_linear_kind(kind);
  const std::size_t d = p.w.size();
  Row g(d + 1, 0.0);
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double z = dot(p.w, X[i]) + p.b;
    double coef = 0.0;
    if (kind == ClassifierKind::logreg) {
      coef = sigmoid(z) - (y[i] == 1 ? 1.0 : 0.0);
    } else {
      const double yi = y[i] == 1 ? 1.0 : -1.0;
      if (yi * z < 1.0) coef = -yi;
    }
    for (std::size_t j = 0; j < d; ++j) g[j] += coef * X[i][j];
    g[d] += coef;
  }
  const double n = static_cast<double>(X.size());
  const double lambda = kind == ClassifierKind::logreg ? h.logreg_l2 : h.svm_lambda;
  for (std::size_t j = 0; j < d; ++j) g[j] = g[j] / n + lambda * p.w[j];
  g[d] /= n;
  return g;
}

ClassicModel train(ClassifierKind kind, const Matrix& X, std::span<const int> y,
                   const Hyperparameters& hyper, std::uint64_t seed,
                   std::vector<std::string> feature_names) {
  const std::size_t d = validate_data(X, y);
  if (kind != ClassifierKind::knn && !both_classes(y)) {
    throw InputError(std::string(to_string(kind)) + " needs both classes in the training data");
  }
  if (!feature_names.empty() && feature_names.size() != d) {
    throw InputError("feature name count does not match the data width");
  }
  ClassicModel m;
  m.kind = kind;
  m.hyper = hyper;
  m.seed = seed;
  m.dim = d;
  m.feature_names = std::move(feature_names);

  const bool uses_scaling = kind == ClassifierKind::logreg || kind == ClassifierKind::linear_svm ||
                            kind == ClassifierKind::knn;
  const Matrix* data = &X;
  Matrix scaled;
  if (uses_scaling && hyper.standardize) {
    m.standardizer = Standardizer::fit(X);
    scaled.reserve(X.size());
    for (const Row& r : X) scaled.push_back(m.standardizer->apply(r));
    data = &scaled;
  }

  switch (kind) {
    case ClassifierKind::logreg: m.params = train_logreg(*data, y, hyper); break;
    case ClassifierKind::linear_svm: m.params = train_svm(*data, y, hyper, seed); break;
    case ClassifierKind::naive_bayes: m.params = train_nb(X, y, hyper); break;
    case ClassifierKind::knn: {
      if (hyper.knn_k == 0) throw InputError("knn_k must be positive");
      KnnParams p;
      p.X = *data;
      p.y.assign(y.begin(), y.end());
      p.k = hyper.knn_k;
      m.params = std::move(p);
      break;
    }
    case ClassifierKind::random_forest: m.params = train_forest(X, y, hyper, seed); break;
  }
  return m;
}

namespace {

Prediction predict_knn(const KnnParams& p, std::span<const double> x) {
  struct Cand {
    double dist;
    int label;
    std::size_t index;
  };
  std::vector<Cand> cands;
  cands.reserve(p.X.size());
  for (std::size_t i = 0; i < p.X.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double dv = p.X[i][j] - x[j];
      s += dv * dv;
    }
    cands.push_back({s, p.y[i], i});
  }
  const std::size_t k = std::min(p.k, cands.size());
  std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(k), cands.end(),
                    [](const Cand& a, const Cand& b) {
                      if (a.dist != b.dist) return a.dist < b.dist;
                      if (a.label != b.label) return a.label > b.label;
                      return a.index < b.index;
                    });
  std::size_t votes = 0;
  for (std::size_t i = 0; i < k; ++i) votes += static_cast<std::size_t>(cands[i].label);
  const double score = static_cast<double>(votes) / static_cast<double>(k);
  return {2 * votes >= k ? 1 : 0, score};
}

Prediction predict_nb(const NaiveBayesParams& p, std::span<const double> x) {
  double ll[2];
  for (int c = 0; c < 2; ++c) {
    double s = p.log_prior[c];
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double v = p.var[c][j];
      const double dv = x[j] - p.mean[c][j];
      s += -0.5 * std::log(2.0 * M_PI * v) - dv * dv / (2.0 * v);
    }
    ll[c] = s;
  }
  return {ll[1] >= ll[0] ? 1 : 0, sigmoid(ll[1] - ll[0])};
}

}  // namespace

Prediction predict(const ClassicModel& model, std::span<const double> x) {
  if (x.size() != model.dim) {
    throw std::invalid_argument("predict: expected " + std::to_string(model.dim) +
                                " features, got " + std::to_string(x.size()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("predict: non-finite feature");
  }
  Row scaled;
  std::span<const double> input = x;
  if (model.standardizer) {
    scaled = model.standardizer->apply(x);
    input = scaled;
  }
  switch (model.kind) {
    case ClassifierKind::logreg: {
      const auto& p = std::get<LinearParams>(model.params);
      const double score = sigmoid(dot(p.w, input) + p.b);
      return {score >= 0.5 ? 1 : 0, score};
    }
    case ClassifierKind::linear_svm: {
      const auto& p = std::get<LinearParams>(model.params);
      const double margin = dot(p.w, input) + p.b;
      return {margin >= 0.0 ? 1 : 0, margin};
    }
    case ClassifierKind::naive_bayes:
      return predict_nb(std::get<NaiveBayesParams>(model.params), input);
    case ClassifierKind::knn:
      return predict_knn(std::get<KnnParams>(model.params), input);
    case ClassifierKind::random_forest: {
      const auto& f = std::get<ForestParams>(model.params);
      std::size_t votes = 0;
      for (const DecisionTree& t : f.trees) votes += static_cast<std::size_t>(t.predict(input));
      const double score = static_cast<double>(votes) / static_cast<double>(f.trees.size());
      return {2 * votes >= f.trees.size() ? 1 : 0, score};
    }
  }
  throw std::logic_error("predict: unhandled kind");
}

std::vector<Prediction> predict_all(const ClassicModel& model, const Matrix& X) {
  std::vector<Prediction> out;
  out.reserve(X.size());
  for (const Row& r : X) out.push_back(predict(model, r));
  return out;
}

// ---- serialization ----

namespace {

using json = nlohmann::ordered_json;

json hyper_to_json(const Hyperparameters& h) {
  return json{{"logreg_l2", h.logreg_l2},
              {"logreg_lr", h.logreg_lr},
              {"logreg_max_iter", h.logreg_max_iter},
              {"logreg_grad_tol", h.logreg_grad_tol},
              {"svm_lambda", h.svm_lambda},
              {"svm_epochs", h.svm_epochs},
              {"knn_k", h.knn_k},
              {"nb_var_floor", h.nb_var_floor},
              {"rf_trees", h.rf_trees},
              {"rf_max_features", h.rf_max_features},
              {"rf_min_samples_leaf", h.rf_min_samples_leaf},
              {"standardize", h.standardize}};
}

Hyperparameters hyper_from_json(const json& j) {
  Hyperparameters h;
  h.logreg_l2 = j.at("logreg_l2").get<double>();
  h.logreg_lr = j.at("logreg_lr").get<double>();
  h.logreg_max_iter = j.at("logreg_max_iter").get<std::size_t>();
  h.logreg_grad_tol = j.at("logreg_grad_tol").get<double>();
  h.svm_lambda = j.at("svm_lambda").get<double>();
  h.svm_epochs = j.at("svm_epochs").get<std::size_t>();
  h.knn_k = j.at("knn_k").get<std::size_t>();
  h.nb_var_floor = j.at("nb_var_floor").get<double>();
  h.rf_trees = j.at("rf_trees").get<std::size_t>();
  h.rf_max_features = j.at("rf_max_features").get<std::size_t>();
  h.rf_min_samples_leaf = j.at("rf_min_samples_leaf").get<std::size_t>();
  h.standardize = j.at("standardize").get<bool>();
  return h;
}

json params_to_json(const ClassicModel& m) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LinearParams>) {
          return json{{"w", p.w}, {"b", p.b}, {"iterations", p.iterations}};
        } else if constexpr (std::is_same_v<T, NaiveBayesParams>) {
          return json{{"mean", {p.mean[0], p.mean[1]}},
                      {"var", {p.var[0], p.var[1]}},
                      {"log_prior", {p.log_prior[0], p.log_prior[1]}}};
        } else if constexpr (std::is_same_v<T, KnnParams>) {
          return json{{"k", p.k}, {"X", p.X}, {"y", p.y}};
        } else {
          json trees = json::array();
          for (const DecisionTree& t : p.trees) {
            json nodes = json::array();
            for (const TreeNode& n : t.nodes) {
              nodes.push_back({n.feature, n.threshold, n.left, n.right, n.label});
            }
            trees.push_back({{"seed", t.seed}, {"nodes", std::move(nodes)}});
          }
          return json{{"trees", std::move(trees)}};
        }
      },
      m.params);
}

ModelParams params_from_json(ClassifierKind kind, const json& j) {
  switch (kind) {
    case ClassifierKind::logreg:
    case ClassifierKind::linear_svm: {
      LinearParams p;
      p.w = j.at("w").get<Row>();
      p.b = j.at("b").get<double>();
      p.iterations = j.at("iterations").get<std::size_t>();
      return p;
    }
    case ClassifierKind::naive_bayes: {
      NaiveBayesParams p;
      for (int c = 0; c < 2; ++c) {
        p.mean[c] = j.at("mean").at(c).get<Row>();
        p.var[c] = j.at("var").at(c).get<Row>();
        p.log_prior[c] = j.at("log_prior").at(c).get<double>();
      }
      return p;
    }
    case ClassifierKind::knn: {
      KnnParams p;
      p.k = j.at("k").get<std::size_t>();
      p.X = j.at("X").get<Matrix>();
      p.y = j.at("y").get<std::vector<int>>();
      return p;
    }
    case ClassifierKind::random_forest: {
      ForestParams p;
      for (const json& jt : j.at("trees")) {
        DecisionTree t;
        t.seed = jt.at("seed").get<std::uint64_t>();
        for (const json& jn : jt.at("nodes")) {
          t.nodes.push_back({jn.at(0).get<int>(), jn.at(1).get<double>(), jn.at(2).get<int>(),
                             jn.at(3).get<int>(), jn.at(4).get<int>()});
        }
        p.trees.push_back(std::move(t));
      }
      return p;
    }
  }
  throw std::logic_error("params_from_json: unhandled kind");
}

}  // namespace

void write_model(const ClassicModel& m, std::ostream& out) {
  json j;
  j["format"] = "veritrace-classic-model";
  j["version"] = std::to_string(kModelFormatMajor) + "." + std::to_string(kModelFormatMinor);
  j["kind"] = std::string(to_string(m.kind));
  j["seed"] = m.seed;
  j["dim"] = m.dim;
  j["feature_names"] = m.feature_names;
  j["hyper"] = hyper_to_json(m.hyper);
  if (m.standardizer) {
    j["standardizer"] = {{"mean", m.standardizer->mean}, {"scale", m.standardizer->scale}};
  } else {
    j["standardizer"] = nullptr;
  }
  j["params"] = params_to_json(m);
  out << j.dump(1) << '\n';
}

ClassicModel read_model(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", std::string()) != "veritrace-classic-model") {
      throw InputError("not a classic model file");
    }
    const std::string version = j.at("version").get<std::string>();
    const int major = std::stoi(version.substr(0, version.find('.')));
    if (major > kModelFormatMajor) {
      throw InputError("model file version " + version + " is newer than supported " +
                       std::to_string(kModelFormatMajor) + ".x");
    }
    ClassicModel m;
    m.kind = parse_classifier_kind(j.at("kind").get<std::string>());
    m.seed = j.at("seed").get<std::uint64_t>();
    m.dim = j.at("dim").get<std::size_t>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.hyper = hyper_from_json(j.at("hyper"));
    if (!j.at("standardizer").is_null()) {
      m.standardizer = Standardizer{j["standardizer"].at("mean").get<Row>(),
                                    j["standardizer"].at("scale").get<Row>()};
    }
    m.params = params_from_json(m.kind, j.at("params"));
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const ClassicModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write model file " + path.string());
  write_model(model, out);
}

ClassicModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("model file not found: " + path.string());
  return read_model(in);
}

}  // namespace veritrace
