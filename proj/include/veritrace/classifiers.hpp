#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace veritrace {

class Rng;

using Row = std::vector<double>;
using Matrix = std::vector<Row>;

enum class ClassifierKind { logreg, naive_bayes, linear_svm, knn, random_forest };

std::string_view to_string(ClassifierKind kind);
ClassifierKind parse_classifier_kind(std::string_view s);
inline constexpr ClassifierKind kAllClassifiers[] = {
    ClassifierKind::logreg, ClassifierKind::naive_bayes, ClassifierKind::linear_svm,
    ClassifierKind::knn, ClassifierKind::random_forest};

struct Hyperparameters {
  // logistic regression
  double logreg_l2 = 1e-4;
  double logreg_lr = 0.5;
  std::size_t logreg_max_iter = 10000;
  double logreg_grad_tol = 1e-6;
  // linear SVM
  double svm_lambda = 1e-2;
  std::size_t svm_epochs = 2000;
  // k-nearest neighbours
  std::size_t knn_k = 5;
  // naive Bayes
  double nb_var_floor = 1e-9;
  // random forest
  std::size_t rf_trees = 100;
  std::size_t rf_max_features = 2;
  std::size_t rf_min_samples_leaf = 1;
  unsigned rf_threads = 1;  // does not affect results
  // z-score features for logreg, SVM and kNN
  bool standardize = true;

  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

/// Per-feature z-score fitted on training data. A zero spread maps to scale 1.
struct Standardizer {
  Row mean;
  Row scale;

  static Standardizer fit(const Matrix& X);
  Row apply(std::span<const double> x) const;
  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

struct LinearParams {
  Row w;
  double b = 0.0;
  std::vector<double> loss_history;  // accepted-step losses (logreg only)
  std::size_t iterations = 0;
  friend bool operator==(const LinearParams&, const LinearParams&) = default;
};

struct NaiveBayesParams {
  Row mean[2];
  Row var[2];
  double log_prior[2] = {0.0, 0.0};
  friend bool operator==(const NaiveBayesParams&, const NaiveBayesParams&) = default;
};

struct KnnParams {
  Matrix X;  // standardized when the model standardizes
  std::vector<int> y;
  std::size_t k = 5;
  friend bool operator==(const KnnParams&, const KnnParams&) = default;
};

/// Flat binary tree. Internal nodes send x[feature] <= threshold to `left`.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;  // leaf prediction
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::uint64_t seed = 0;

  int predict(std::span<const double> x) const;
  std::size_t depth() const;
  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct ForestParams {
  std::vector<DecisionTree> trees;
  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

using ModelParams = std::variant<LinearParams, NaiveBayesParams, KnnParams, ForestParams>;

struct ClassicModel {
  ClassifierKind kind = ClassifierKind::logreg;
  Hyperparameters hyper;
  std::uint64_t seed = 0;
  std::size_t dim = 0;
  std::vector<std::string> feature_names;
  std::optional<Standardizer> standardizer;
  ModelParams params;
  friend bool operator==(const ClassicModel&, const ClassicModel&) = default;
};

struct Prediction {
  int label = 0;
  double score = 0.0;  // probability, vote fraction, or SVM margin
};

/// Throws InputError for empty, ragged or non-finite data, labels outside
/// {0,1}, or a single class (kNN accepts one point of either class).
ClassicModel train(ClassifierKind kind, const Matrix& X, std::span<const int> y,
                   const Hyperparameters& hyper = {}, std::uint64_t seed = 7,
                   std::vector<std::string> feature_names = {});

/// Throws std::invalid_argument on a dimension mismatch or non-finite input.
Prediction predict(const ClassicModel& model, std::span<const double> x);
std::vector<Prediction> predict_all(const ClassicModel& model, const Matrix& X);

/// Regularized training objective of logreg or linear_svm evaluated on raw
/// (already transformed) data. Gradient layout: w[0..d-1] then b.
double loss_value(ClassifierKind kind, const LinearParams& params, const Matrix& X,
                  std::span<const int> y, const Hyperparameters& hyper = {});
Row loss_gradient(ClassifierKind kind, const LinearParams& params, const Matrix& X,
                  std::span<const int> y, const Hyperparameters& hyper = {});

// Decision tree building blocks, exposed for verification.
struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
};

/// Best Gini split of the rows `idx` over `features`, scanning midpoints
/// between distinct sorted values. Ties go to the lower feature index, then
/// the lower threshold.
SplitChoice find_best_split(const Matrix& X, std::span<const int> y, std::span<const std::size_t> idx,
                            std::span<const int> features, std::size_t min_samples_leaf = 1);

struct TreeOptions {
  std::size_t max_features = 2;
  std::size_t min_samples_leaf = 1;
};

/// Grows a tree on rows `idx` (duplicates allowed) until leaves are pure or
/// no split separates them. Feature subsets per node come from `rng`.
DecisionTree grow_tree(const Matrix& X, std::span<const int> y, std::span<const std::size_t> idx,
                       const TreeOptions& options, Rng& rng);

// Model files: versioned JSON container.
inline constexpr int kModelFormatMajor = 1;
inline constexpr int kModelFormatMinor = 0;

void write_model(const ClassicModel& model, std::ostream& out);
ClassicModel read_model(std::istream& in);
void save_model(const ClassicModel& model, const std::filesystem::path& path);
/// Missing file -> MissingArtifactError; newer major version -> InputError.
ClassicModel load_model(const std::filesystem::path& path);

}  // namespace veritrace
