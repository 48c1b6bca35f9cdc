#include "veritrace/neural.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "veritrace/errors.hpp"
#include "veritrace/random.hpp"

namespace veritrace {

std::string_view to_string(InputMode mode) {
  return mode == InputMode::image_only ? "image_only" : "tweet_plus_image";
}

InputMode parse_input_mode(std::string_view s) {
  if (s == "image_only" || s == "A" || s == "a") return InputMode::image_only;
  if (s == "tweet_plus_image" || s == "B" || s == "b") return InputMode::tweet_plus_image;
  throw InputError("unknown input mode '" + std::string(s) + "' (expected image_only or tweet_plus_image)");
}

std::string_view to_string(VoteRule rule) {
  return rule == VoteRule::mean_prob ? "mean_prob" : "majority";
}

VoteRule parse_vote_rule(std::string_view s) {
  if (s == "mean_prob") return VoteRule::mean_prob;
  if (s == "majority") return VoteRule::majority;
  throw InputError("unknown vote rule '" + std::string(s) + "'");
}

std::string instance_text(InputMode mode, std::string_view post_text, std::string_view title) {
  if (mode == InputMode::image_only) return std::string(title);
  std::string out(post_text);
  out += ' ';
  out += title;
  return out;
}

std::vector<Instance> build_instances(const Corpus& corpus, const EvidenceStore& store, Engine engine,
                                      InputMode mode, std::size_t k) {
  std::vector<Instance> out;
  for (const Post& post : corpus.posts()) {
    for (const std::string& title : get_titles(store, post.image_id, engine, k)) {
      Instance inst;
      inst.text = instance_text(mode, post.text, title);
      inst.label = label_value(post.label);
      inst.post_id = post.post_id;
      inst.mode = mode;
      out.push_back(std::move(inst));
    }
  }
  return out;
}

std::vector<TokenId> encode_text(std::string_view text, const Vocab& vocab, std::size_t max_len) {
  return encode(normalize(text), vocab, max_len);
}

void encode_instances(std::span<Instance> instances, const Vocab& vocab, std::size_t max_len) {
  for (Instance& inst : instances) inst.ids = encode_text(inst.text, vocab, max_len);
}

ParamLayout ParamLayout::of(const NeuralConfig& c) {
  ParamLayout l;
  const std::size_t V = c.vocab_size, E = c.embed_dim, H = c.hidden;
  std::size_t at = 0;
  l.embedding = at;
  at += V * E;
  for (Direction* d : {&l.fwd, &l.bwd}) {
    d->W = at;
    at += 4 * H * E;
    d->U = at;
    at += 4 * H * H;
    d->b = at;
    at += 4 * H;
  }
  l.out_w = at;
  at += 2 * H;
  l.out_b = at;
  at += 1;
  l.total = at;
  return l;
}

namespace {

void check_config(const NeuralConfig& c) {
  if (c.vocab_size < 2 || c.embed_dim == 0 || c.hidden == 0 || c.max_len == 0) {
    throw std::invalid_argument("neural config needs vocab_size >= 2 and positive dimensions");
  }
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double bce_from_logit(double z, int label) {
  const double sp = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return sp - (label == 1 ? z : 0.0);
}

// Activations of one direction over its (unpadded) token sequence.
struct DirectionTrace {
  std::size_t steps = 0;
  std::vector<double> gates;  // steps x 4H, post-activation (i, f, o, g)
  std::vector<double> c;      // (steps + 1) x H, row 0 is the zero initial state
  std::vector<double> h;      // (steps + 1) x H
  std::vector<double> tanh_c; // steps x H
};

void run_direction(const NeuralModel& m, const ParamLayout::Direction& d,
                   std::span<const TokenId> tokens, DirectionTrace& tr) {
  const std::size_t E = m.config.embed_dim, H = m.config.hidden, G = 4 * H;
  const double* P = m.params.data();
  const double* W = P + d.W;
  const double* U = P + d.U;
  const double* b = P + d.b;
  const std::size_t T = tokens.size();
  tr.steps = T;
  tr.gates.assign(T * G, 0.0);
  tr.c.assign((T + 1) * H, 0.0);
  tr.h.assign((T + 1) * H, 0.0);
  tr.tanh_c.assign(T * H, 0.0);
  std::vector<double> a(G);
  for (std::size_t t = 0; t < T; ++t) {
    const double* x = P + static_cast<std::size_t>(tokens[t]) * E;
    const double* hp = &tr.h[t * H];
    for (std::size_t r = 0; r < G; ++r) {
      double s = b[r];
      const double* wr = W + r * E;
      for (std::size_t e = 0; e < E; ++e) s += wr[e] * x[e];
      const double* ur = U + r * H;
      for (std::size_t j = 0; j < H; ++j) s += ur[j] * hp[j];
      a[r] = s;
    }
    double* g = &tr.gates[t * G];
    for (std::size_t j = 0; j < H; ++j) {
      g[j] = sigmoid(a[j]);
      g[H + j] = sigmoid(a[H + j]);
      g[2 * H + j] = sigmoid(a[2 * H + j]);
      g[3 * H + j] = std::tanh(a[3 * H + j]);
    }
    const double* cp = &tr.c[t * H];
    double* cn = &tr.c[(t + 1) * H];
    double* hn = &tr.h[(t + 1) * H];
    double* tc = &tr.tanh_c[t * H];
    for (std::size_t j = 0; j < H; ++j) {
      cn[j] = g[H + j] * cp[j] + g[j] * g[3 * H + j];
      tc[j] = std::tanh(cn[j]);
      hn[j] = g[2 * H + j] * tc[j];
    }
  }
}

void backprop_direction(const NeuralModel& m, const ParamLayout::Direction& d,
                        std::span<const TokenId> tokens, const DirectionTrace& tr,
                        std::vector<double> dh, std::vector<double>& grad, GradientFault fault) {
  const std::size_t E = m.config.embed_dim, H = m.config.hidden, G = 4 * H;
  const double* P = m.params.data();
  const double* W = P + d.W;
  const double* U = P + d.U;
  double* dW = grad.data() + d.W;
  double* dU = grad.data() + d.U;
  double* db = grad.data() + d.b;
  std::vector<double> dc(H, 0.0), da(G), dh_prev(H);
  for (std::size_t t = tr.steps; t-- > 0;) {
    const double* g = &tr.gates[t * G];
    const double* cp = &tr.c[t * H];
    const double* hp = &tr.h[t * H];
    const double* tc = &tr.tanh_c[t * H];
    for (std::size_t j = 0; j < H; ++j) {
      const double i = g[j], f = g[H + j], o = g[2 * H + j], cand = g[3 * H + j];
      const double d_o = dh[j] * tc[j];
      dc[j] += dh[j] * o * (1.0 - tc[j] * tc[j]);
      const double d_i = dc[j] * cand;
      const double d_g = dc[j] * i;
      const double d_f = dc[j] * cp[j];
      da[j] = d_i * i * (1.0 - i);
      da[H + j] = fault == GradientFault::zero_forget_gate ? 0.0 : d_f * f * (1.0 - f);
      da[2 * H + j] = d_o * o * (1.0 - o);
      da[3 * H + j] = d_g * (1.0 - cand * cand);
      dc[j] *= f;
    }
    const std::size_t tok = static_cast<std::size_t>(tokens[t]);
    const double* x = P + tok * E;
    double* dx = grad.data() + tok * E;
    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
    for (std::size_t r = 0; r < G; ++r) {
      const double dar = da[r];
      if (dar == 0.0) continue;
      db[r] += dar;
      double* dwr = dW + r * E;
      const double* wr = W + r * E;
      for (std::size_t e = 0; e < E; ++e) {
        dwr[e] += dar * x[e];
        dx[e] += dar * wr[e];
      }
      double* dur = dU + r * H;
      const double* ur = U + r * H;
      for (std::size_t j = 0; j < H; ++j) {
        dur[j] += dar * hp[j];
        dh_prev[j] += dar * ur[j];
      }
    }
    dh.swap(dh_prev);
  }
}

struct SequenceView {
  std::vector<TokenId> fwd;
  std::vector<TokenId> bwd;
};

SequenceView unpadded(const NeuralModel& m, std::span<const TokenId> ids) {
  if (ids.size() != m.config.max_len) {
    throw std::invalid_argument("forward: expected " + std::to_string(m.config.max_len) +
                                " ids, got " + std::to_string(ids.size()));
  }
  if (m.params.size() != m.layout().total) {
    throw std::invalid_argument("forward: parameter vector does not match the config");
  }
  SequenceView v;
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= m.config.vocab_size) {
      throw std::invalid_argument("forward: token id " + std::to_string(id) + " out of range");
    }
    if (id != Vocab::kPad) v.fwd.push_back(id);
  }
  v.bwd.assign(v.fwd.rbegin(), v.fwd.rend());
  return v;
}

double logit(const NeuralModel& m, const DirectionTrace& f, const DirectionTrace& b) {
  const std::size_t H = m.config.hidden;
  const ParamLayout l = m.layout();
  const double* w = m.params.data() + l.out_w;
  double z = m.params[l.out_b];
  const double* hf = &f.h[f.steps * H];
  const double* hb = &b.h[b.steps * H];
  for (std::size_t j = 0; j < H; ++j) z += w[j] * hf[j] + w[H + j] * hb[j];
  return z;
}

}  // namespace

NeuralModel zero_model(const NeuralConfig& config) {
  check_config(config);
  NeuralModel m;
  m.config = config;
  m.params.assign(ParamLayout::of(config).total, 0.0);
  return m;
}

NeuralModel init_model(const NeuralConfig& config) {
  NeuralModel m = zero_model(config);
  const ParamLayout l = m.layout();
  Rng rng(config.seed);
  const double r = config.init_range;
  for (double& p : m.params) p = rng.uniform(-r, r);
  const std::size_t H = config.hidden;
  for (const auto* d : {&l.fwd, &l.bwd}) {
    for (std::size_t j = 0; j < 4 * H; ++j) {
      m.params[d->b + j] = (j >= H && j < 2 * H) ? config.forget_bias : 0.0;
    }
  }
  m.params[l.out_b] = 0.0;
  return m;
}

double forward(const NeuralModel& model, std::span<const TokenId> ids) {
  const SequenceView v = unpadded(model, ids);
  const ParamLayout l = model.layout();
  DirectionTrace f, b;
  run_direction(model, l.fwd, v.fwd, f);
  run_direction(model, l.bwd, v.bwd, b);
  return sigmoid(logit(model, f, b));
}

double instance_loss(const NeuralModel& model, std::span<const TokenId> ids, int label) {
  const SequenceView v = unpadded(model, ids);
  const ParamLayout l = model.layout();
  DirectionTrace f, b;
  run_direction(model, l.fwd, v.fwd, f);
  run_direction(model, l.bwd, v.bwd, b);
  return bce_from_logit(logit(model, f, b), label);
}

double loss_and_gradient(const NeuralModel& model, std::span<const TokenId> ids, int label,
                         std::vector<double>& grad, GradientFault fault) {
  const SequenceView v = unpadded(model, ids);
  const ParamLayout l = model.layout();
  if (grad.size() != l.total) grad.assign(l.total, 0.0);
  DirectionTrace f, b;
  run_direction(model, l.fwd, v.fwd, f);
  run_direction(model, l.bwd, v.bwd, b);
  const double z = logit(model, f, b);
  const double dz = sigmoid(z) - (label == 1 ? 1.0 : 0.0);

  const std::size_t H = model.config.hidden;
  const double* w = model.params.data() + l.out_w;
  std::vector<double> dhf(H), dhb(H);
  const double* hf = &f.h[f.steps * H];
  const double* hb = &b.h[b.steps * H];
  for (std::size_t j = 0; j < H; ++j) {
    grad[l.out_w + j] += dz * hf[j];
    grad[l.out_w + H + j] += dz * hb[j];
    dhf[j] = dz * w[j];
    dhb[j] = dz * w[H + j];
  }
  grad[l.out_b] += dz;
  backprop_direction(model, l.fwd, v.fwd, f, std::move(dhf), grad, fault);
  backprop_direction(model, l.bwd, v.bwd, b, std::move(dhb), grad, fault);
  return bce_from_logit(z, label);
}

namespace {

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

Evaluation evaluate(const NeuralModel& m, std::span<const Instance> data) {
  Evaluation ev;
  if (data.empty()) return ev;
  std::size_t correct = 0;
  for (const Instance& inst : data) {
    const double l = instance_loss(m, inst.ids, inst.label);
    ev.loss += l;
    const double p = forward(m, inst.ids);
    correct += static_cast<std::size_t>((p >= 0.5 ? 1 : 0) == inst.label);
  }
  ev.loss /= static_cast<double>(data.size());
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return ev;
}

}  // namespace

NeuralTrainResult train_neural(std::span<const Instance> train, std::span<const Instance> val,
                               const NeuralConfig& config) {
  check_config(config);
  if (config.batch == 0) throw InputError("neural batch size must be positive");
  bool has0 = false, has1 = false;
  for (const Instance& inst : train) {
    if (inst.ids.size() != config.max_len) {
      throw InputError("instance for post '" + inst.post_id + "' is not encoded to max_len");
    }
    (inst.label == 1 ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw InputError("neural training needs instances of both classes");

  NeuralTrainResult result;
  NeuralModel model = init_model(config);
  const std::size_t P = model.params.size();
  std::vector<double> m1(P, 0.0), m2(P, 0.0), grad(P, 0.0);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::size_t step = 0;

  Rng order_rng(config.seed + 1);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  result.report.initial_train_loss = evaluate(model, train).loss;
  if (!std::isfinite(result.report.initial_train_loss)) {
    throw TrainingError("initial training loss is not finite");
  }
  result.report.used_validation = !val.empty();
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_params = model.params;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      const std::size_t end = std::min(order.size(), start + config.batch);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const Instance& inst = train[order[i]];
        batch_loss += loss_and_gradient(model, inst.ids, inst.label, grad);
      }
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("non-finite loss in epoch " + std::to_string(epoch) + ", batch starting at " +
                            std::to_string(start));
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t p = 0; p < P; ++p) {
        const double g = grad[p] * scale;
        m1[p] = beta1 * m1[p] + (1.0 - beta1) * g;
        m2[p] = beta2 * m2[p] + (1.0 - beta2) * g * g;
        model.params[p] -= config.lr * (m1[p] / c1) / (std::sqrt(m2[p] / c2) + eps);
      }
    }
    EpochStats st;
    st.epoch = epoch;
    const Evaluation tr = evaluate(model, train);
    st.train_loss = tr.loss;
    st.train_accuracy = tr.accuracy;
    if (!val.empty()) {
      const Evaluation va = evaluate(model, val);
      st.val_loss = va.loss;
      st.val_accuracy = va.accuracy;
    }
    if (!std::isfinite(st.train_loss) || !std::isfinite(st.val_loss)) {
      throw TrainingError("non-finite loss after epoch " + std::to_string(epoch));
    }
    const double criterion = val.empty() ? st.train_loss : st.val_loss;
    if (criterion < best) {
      best = criterion;
      best_params = model.params;
      result.report.best_epoch = epoch;
    }
    result.report.epochs.push_back(st);
  }
  model.params = std::move(best_params);
  result.model = std::move(model);
  return result;
}

GradCheckResult gradient_check(const NeuralModel& model, std::span<const TokenId> ids, int label,
                               double h, std::size_t samples, std::uint64_t seed, GradientFault fault) {
  // Gradients smaller than this are compared absolutely.
  constexpr double kFloor = 1e-6;
  std::vector<double> grad(model.params.size(), 0.0);
  loss_and_gradient(model, ids, label, grad, fault);

  const ParamLayout l = model.layout();
  const std::size_t E = model.config.embed_dim, H = model.config.hidden;
  std::vector<TokenId> used;
  for (TokenId id : ids) {
    if (id != Vocab::kPad && std::find(used.begin(), used.end(), id) == used.end()) used.push_back(id);
  }
  if (used.empty()) used.push_back(Vocab::kPad);
  struct Block {
    std::size_t offset, size;
  };
  const std::vector<Block> blocks = {
      {l.fwd.W, 4 * H * E}, {l.fwd.U, 4 * H * H}, {l.fwd.b, 4 * H},
      {l.bwd.W, 4 * H * E}, {l.bwd.U, 4 * H * H}, {l.bwd.b, 4 * H},
      {l.out_w, 2 * H},     {l.out_b, 1},         {l.embedding, 0}};

  Rng rng(seed);
  NeuralModel probe = model;
  GradCheckResult res;
  for (std::size_t s = 0; s < samples; ++s) {
    const Block& blk = blocks[s % blocks.size()];
    std::size_t p = 0;
    if (blk.size == 0) {
      const auto row = static_cast<std::size_t>(used[rng.uniform_index(used.size())]);
      p = l.embedding + row * E + rng.uniform_index(E);
    } else {
      p = blk.offset + rng.uniform_index(blk.size);
    }
    const double orig = probe.params[p];
    probe.params[p] = orig + h;
    const double lp = instance_loss(probe, ids, label);
    probe.params[p] = orig - h;
    const double lm = instance_loss(probe, ids, label);
    probe.params[p] = orig;
    const double numeric = (lp - lm) / (2.0 * h);
    const double denom = std::max({std::abs(grad[p]), std::abs(numeric), kFloor});
    res.max_rel_error = std::max(res.max_rel_error, std::abs(grad[p] - numeric) / denom);
    ++res.checked;
  }
  return res;
}

PostPrediction reduce_votes(std::vector<double> probs, VoteRule rule) {
  PostPrediction out;
  if (probs.empty()) {
    out.abstained = true;
    out.score = 0.5;
    out.label = 1;
    return out;
  }
  const double n = static_cast<double>(probs.size());
  if (rule == VoteRule::mean_prob) {
    out.score = std::accumulate(probs.begin(), probs.end(), 0.0) / n;
    out.label = out.score >= 0.5 ? 1 : 0;
  } else {
    std::size_t votes = 0;
    for (double p : probs) votes += p >= 0.5 ? 1 : 0;
    out.score = static_cast<double>(votes) / n;
    out.label = 2 * votes >= probs.size() ? 1 : 0;
  }
  out.title_probs = std::move(probs);
  return out;
}

PostPrediction predict_post(const NeuralModel& model, const Vocab& vocab, std::string_view post_text,
                            std::span<const std::string> titles, VoteRule rule) {
  std::vector<double> probs;
  probs.reserve(titles.size());
  for (const std::string& title : titles) {
    const auto ids = encode_text(instance_text(model.mode, post_text, title), vocab, model.config.max_len);
    probs.push_back(forward(model, ids));
  }
  return reduce_votes(std::move(probs), rule);
}

// ---- serialization ----

void write_neural_model(const NeuralModel& m, std::ostream& out) {
  using json = nlohmann::ordered_json;
  json j;
  j["format"] = "veritrace-neural-model";
  j["version"] = std::to_string(kNeuralFormatMajor) + "." + std::to_string(kNeuralFormatMinor);
  j["mode"] = std::string(to_string(m.mode));
  j["vocab_sha256"] = m.vocab_hash;
  const NeuralConfig& c = m.config;
  j["config"] = {{"vocab_size", c.vocab_size}, {"embed_dim", c.embed_dim}, {"hidden", c.hidden},
                 {"max_len", c.max_len},       {"epochs", c.epochs},       {"batch", c.batch},
                 {"lr", c.lr},                 {"seed", c.seed},           {"init_range", c.init_range},
                 {"forget_bias", c.forget_bias}};
  j["params"] = m.params;
  out << j.dump() << '\n';
}

NeuralModel read_neural_model(std::istream& in) {
  using json = nlohmann::json;
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(std::string("neural model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", std::string()) != "veritrace-neural-model") {
      throw InputError("not a neural model file");
    }
    const std::string version = j.at("version").get<std::string>();
    if (std::stoi(version.substr(0, version.find('.'))) > kNeuralFormatMajor) {
      throw InputError("neural model file version " + version + " is newer than supported " +
                       std::to_string(kNeuralFormatMajor) + ".x");
    }
    NeuralModel m;
    m.mode = parse_input_mode(j.at("mode").get<std::string>());
    m.vocab_hash = j.at("vocab_sha256").get<std::string>();
    const json& c = j.at("config");
    m.config.vocab_size = c.at("vocab_size").get<std::size_t>();
    m.config.embed_dim = c.at("embed_dim").get<std::size_t>();
    m.config.hidden = c.at("hidden").get<std::size_t>();
    m.config.max_len = c.at("max_len").get<std::size_t>();
    m.config.epochs = c.at("epochs").get<std::size_t>();
    m.config.batch = c.at("batch").get<std::size_t>();
    m.config.lr = c.at("lr").get<double>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.config.init_range = c.at("init_range").get<double>();
    m.config.forget_bias = c.at("forget_bias").get<double>();
    m.params = j.at("params").get<std::vector<double>>();
    if (m.params.size() != m.layout().total) throw InputError("neural model parameter count mismatch");
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed neural model file: ") + e.what());
  }
}

void save_neural_model(const NeuralModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write neural model file " + path.string());
  write_neural_model(model, out);
}

NeuralModel load_neural_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("neural model file not found: " + path.string());
  return read_neural_model(in);
}

void check_vocab_matches(const NeuralModel& model, const Vocab& vocab) {
  const std::string h = vocab.content_hash();
  if (h != model.vocab_hash) {
    throw MissingArtifactError("vocabulary does not match the neural model (model expects " +
                               model.vocab_hash.substr(0, 12) + ", vocab is " + h.substr(0, 12) + ")");
  }
}

}  // namespace veritrace
