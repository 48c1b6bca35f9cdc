#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "veritrace/corpus.hpp"
#include "veritrace/evidence.hpp"
#include "veritrace/textprep.hpp"

namespace veritrace {

/// image_only: the instance text is one evidence title.
/// tweet_plus_image: the post text, one space, then the title.
enum class InputMode { image_only, tweet_plus_image };
std::string_view to_string(InputMode mode);
InputMode parse_input_mode(std::string_view s);  // also accepts "A" / "B"

struct Instance {
  std::string text;
  std::vector<TokenId> ids;  // filled by encode_instances
  int label = 0;
  std::string post_id;
  InputMode mode = InputMode::image_only;
};

std::string instance_text(InputMode mode, std::string_view post_text, std::string_view title);

/// One instance per (post, title) pair for the first k titles. Posts without
/// an evidence record contribute nothing.
std::vector<Instance> build_instances(const Corpus& corpus, const EvidenceStore& store, Engine engine,
                                      InputMode mode, std::size_t k = kMaxTitles);

/// normalize + encode each instance text in place.
void encode_instances(std::span<Instance> instances, const Vocab& vocab, std::size_t max_len);
std::vector<TokenId> encode_text(std::string_view text, const Vocab& vocab, std::size_t max_len);

struct NeuralConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 64;
  std::size_t hidden = 32;
  std::size_t max_len = kDefaultMaxLen;
  std::size_t epochs = 25;
  std::size_t batch = 32;
  double lr = 1e-3;
  std::uint64_t seed = 7;
  double init_range = 0.08;
  double forget_bias = 1.0;

  friend bool operator==(const NeuralConfig&, const NeuralConfig&) = default;
};

/// Offsets of every parameter block inside the flat parameter vector.
/// Gate rows are ordered input, forget, output, candidate (each H rows).
struct ParamLayout {
  struct Direction {
    std::size_t W = 0;  // 4H x E, row-major
    std::size_t U = 0;  // 4H x H, row-major
    std::size_t b = 0;  // 4H
  };
  std::size_t embedding = 0;  // V x E, row-major
  Direction fwd;
  Direction bwd;
  std::size_t out_w = 0;  // 2H: forward half then backward half
  std::size_t out_b = 0;
  std::size_t total = 0;

  static ParamLayout of(const NeuralConfig& config);
};

struct NeuralModel {
  NeuralConfig config;
  std::vector<double> params;
  std::string vocab_hash;  // content hash of the vocabulary used to encode
  InputMode mode = InputMode::image_only;

  ParamLayout layout() const { return ParamLayout::of(config); }
  friend bool operator==(const NeuralModel&, const NeuralModel&) = default;
};

/// Seeded uniform(-init_range, init_range) weights, forget-gate biases set to
/// forget_bias, other biases zero. Throws std::invalid_argument for a zero
/// dimension.
NeuralModel init_model(const NeuralConfig& config);
/// All parameters zero.
NeuralModel zero_model(const NeuralConfig& config);

/// Probability of label 1. PAD tokens are skipped by both directions; the
/// readout concatenates each direction's state after its last real token.
/// Throws std::invalid_argument unless ids.size() == max_len and every id is
/// below vocab_size.
double forward(const NeuralModel& model, std::span<const TokenId> ids);

/// Deliberate gradient faults used to show the gradient check can fail.
enum class GradientFault { none, zero_forget_gate };

/// BCE loss of one sequence and its gradient with respect to every parameter.
double loss_and_gradient(const NeuralModel& model, std::span<const TokenId> ids, int label,
                         std::vector<double>& grad, GradientFault fault = GradientFault::none);
double instance_loss(const NeuralModel& model, std::span<const TokenId> ids, int label);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainReport {
  double initial_train_loss = 0.0;  // before the first update
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;  // checkpoint kept in the returned model
  bool used_validation = false;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NeuralTrainResult {
  NeuralModel model;
  TrainReport report;
};

/// Mini-batch Adam on mean BCE. The checkpoint with the lowest validation
/// loss is returned (training loss when `val` is empty). Instances must be
/// encoded. Throws InputError for single-class training data and
/// TrainingError when a loss becomes non-finite.
NeuralTrainResult train_neural(std::span<const Instance> train, std::span<const Instance> val,
                               const NeuralConfig& config);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// Analytic gradient versus central differences on at least `samples`
/// parameters drawn across every block (embedding rows used by the input).
GradCheckResult gradient_check(const NeuralModel& model, std::span<const TokenId> ids, int label,
                               double h = 1e-5, std::size_t samples = 200, std::uint64_t seed = 1,
                               GradientFault fault = GradientFault::none);

enum class VoteRule { mean_prob, majority };
std::string_view to_string(VoteRule rule);
VoteRule parse_vote_rule(std::string_view s);

struct PostPrediction {
  int label = 1;
  double score = 0.5;
  bool abstained = false;
  std::vector<double> title_probs;
};

/// Reduce per-title probabilities. Ties and a score of exactly 0.5 go to
/// label 1; an empty list abstains with score 0.5.
PostPrediction reduce_votes(std::vector<double> probs, VoteRule rule);

PostPrediction predict_post(const NeuralModel& model, const Vocab& vocab, std::string_view post_text,
                            std::span<const std::string> titles, VoteRule rule = VoteRule::mean_prob);

inline constexpr int kNeuralFormatMajor = 1;
inline constexpr int kNeuralFormatMinor = 0;

void write_neural_model(const NeuralModel& model, std::ostream& out);
NeuralModel read_neural_model(std::istream& in);
void save_neural_model(const NeuralModel& model, const std::filesystem::path& path);
NeuralModel load_neural_model(const std::filesystem::path& path);
/// Throws MissingArtifactError when the hashes differ.
void check_vocab_matches(const NeuralModel& model, const Vocab& vocab);

}  // namespace veritrace
