#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "veritrace/classifiers.hpp"
#include "veritrace/random.hpp"

namespace veritrace {

int DecisionTree::predict(std::span<const double> x) const {
  if (nodes.empty()) throw std::logic_error("DecisionTree::predict on an empty tree");
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].label;
}

std::size_t DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, level[i]);
    if (nodes[i].feature >= 0) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return best;
}

namespace {

// Split quality as the exact rational (c0l^2 + c1l^2)/nl + (c0r^2 + c1r^2)/nr,
// stored as numerator and denominator. Larger means lower weighted Gini.
struct Purity {
  __int128 num = 0;
  __int128 den = 1;

  static Purity of(long long c0l, long long c1l, long long c0r, long long c1r) {
    const __int128 nl = c0l + c1l, nr = c0r + c1r;
    const __int128 sl = static_cast<__int128>(c0l) * c0l + static_cast<__int128>(c1l) * c1l;
    const __int128 sr = static_cast<__int128>(c0r) * c0r + static_cast<__int128>(c1r) * c1r;
    return {sl * nr + sr * nl, nl * nr};
  }
  bool better_than(const Purity& o) const { return num * o.den > o.num * den; }
};

int majority(std::span<const int> y, std::span<const std::size_t> idx) {
  std::size_t ones = 0;
  for (std::size_t i : idx) ones += static_cast<std::size_t>(y[i]);
  return 2 * ones >= idx.size() ? 1 : 0;
}

bool pure(std::span<const int> y, std::span<const std::size_t> idx) {
  for (std::size_t i : idx) {
    if (y[i] != y[idx.front()]) return false;
  }
  return true;
}

}  // namespace

SplitChoice find_best_split(const Matrix& X, std::span<const int> y, std::span<const std::size_t> idx,
                            std::span<const int> features, std::size_t min_samples_leaf) {
  SplitChoice best;
  Purity best_q;
  const std::size_t n = idx.size();
  long long total1 = 0;
  for (std::size_t i : idx) total1 += y[i];
  const long long total0 = static_cast<long long>(n) - total1;

  std::vector<int> sorted_features(features.begin(), features.end());
  std::sort(sorted_features.begin(), sorted_features.end());

  std::vector<std::size_t> order(idx.begin(), idx.end());
  for (int f : sorted_features) {
    const auto fu = static_cast<std::size_t>(f);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return X[a][fu] < X[b][fu]; });
    long long l0 = 0, l1 = 0;
    for (std::size_t pos = 0; pos + 1 < n; ++pos) {
      (y[order[pos]] == 1 ? l1 : l0) += 1;
      const double lo = X[order[pos]][fu];
      const double hi = X[order[pos + 1]][fu];
      if (!(lo < hi)) continue;
      const std::size_t nl = pos + 1;
      if (nl < min_samples_leaf || n - nl < min_samples_leaf) continue;
      const Purity q = Purity::of(l0, l1, total0 - l0, total1 - l1);
      if (!best.found || q.better_than(best_q)) {
        double thr = lo + (hi - lo) / 2.0;
        if (!(thr < hi)) thr = lo;
        best = {true, f, thr};
        best_q = q;
      }
    }
  }
  return best;
}

DecisionTree grow_tree(const Matrix& X, std::span<const int> y, std::span<const std::size_t> idx,
                       const TreeOptions& options, Rng& rng) {
  if (idx.empty()) throw std::invalid_argument("grow_tree: no samples");
  const int d = static_cast<int>(X.front().size());
  const std::size_t m = std::clamp<std::size_t>(options.max_features, 1, static_cast<std::size_t>(d));

  DecisionTree tree;
  struct Pending {
    int node;
    std::vector<std::size_t> rows;
  };
  std::vector<Pending> stack;
  tree.nodes.push_back({});
  stack.push_back({0, std::vector<std::size_t>(idx.begin(), idx.end())});

  std::vector<int> all(static_cast<std::size_t>(d));
  std::iota(all.begin(), all.end(), 0);

  while (!stack.empty()) {
    Pending job = std::move(stack.back());
    stack.pop_back();
    const auto ni = static_cast<std::size_t>(job.node);
    tree.nodes[ni].label = majority(y, job.rows);
    if (pure(y, job.rows)) continue;

    // Partial Fisher-Yates: the first m entries become this node's candidates.
    std::vector<int> perm = all;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + rng.uniform_index(perm.size() - i);
      std::swap(perm[i], perm[j]);
    }
    SplitChoice choice = find_best_split(X, y, job.rows, std::span<const int>(perm.data(), m),
                                         options.min_samples_leaf);
    if (!choice.found && m < perm.size()) {
      choice = find_best_split(X, y, job.rows,
                               std::span<const int>(perm.data() + m, perm.size() - m),
                               options.min_samples_leaf);
    }
    if (!choice.found) continue;

    std::vector<std::size_t> left, right;
    for (std::size_t r : job.rows) {
      (X[r][static_cast<std::size_t>(choice.feature)] <= choice.threshold ? left : right).push_back(r);
    }
    const int li = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes.push_back({});
    tree.nodes[ni].feature = choice.feature;
    tree.nodes[ni].threshold = choice.threshold;
    tree.nodes[ni].left = li;
    tree.nodes[ni].right = li + 1;
    stack.push_back({li + 1, std::move(right)});
    stack.push_back({li, std::move(left)});
  }
  return tree;
}

}  // namespace veritrace
