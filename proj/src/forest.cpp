#include "realexp/forest.hpp"

#include <algorithm>
#include <cmath>

#include "realexp/parallel.hpp"
#include "realexp/rng.hpp"

namespace realexp {

double Tree::predict(std::span<const double> x) const {
  int at = 0;
  while (!nodes[static_cast<std::size_t>(at)].is_leaf()) {
    const TreeNode& node = nodes[static_cast<std::size_t>(at)];
    at = x[static_cast<std::size_t>(node.feature)] <= node.threshold
             ? node.left
             : node.right;
  }
  return nodes[static_cast<std::size_t>(at)].prediction;
}

int Tree::depth() const {
  // Iterative depth over the flat layout.
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    auto [at, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    const TreeNode& node = nodes[static_cast<std::size_t>(at)];
    if (!node.is_leaf()) {
      stack.push_back({node.left, d + 1});
      stack.push_back({node.right, d + 1});
    }
  }
  return deepest;
}

EnsembleForest::EnsembleForest(int n, ForestParams params,
                               std::vector<Tree> trees,
                               std::vector<double> baseline,
                               std::vector<double> gain_importance)
    : n_(n),
      params_(params),
      trees_(std::move(trees)),
      baseline_(std::move(baseline)),
      gain_importance_(std::move(gain_importance)) {
  if (n_ < 1) throw ValidationError("forest needs n >= 1");
  if (trees_.empty()) throw ValidationError("forest needs S >= 1 trees");
  if (static_cast<int>(baseline_.size()) != n_) {
    throw ValidationError("baseline length must match feature count");
  }
}

double EnsembleForest::predict(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_) {
    throw ValidationError("prediction input must have " + std::to_string(n_) +
                          " entries");
  }
  for (double v : x) {
    if (!std::isfinite(v)) {
      throw ValidationError("prediction input must be finite");
    }
  }
  double total = 0.0;
  for (const Tree& tree : trees_) total += tree.predict(x);
  return total / static_cast<double>(trees_.size());
}

namespace {

struct TreeBuilder {
  const std::vector<std::vector<double>>& x;  // row-major design
  const std::vector<double>& y;
  const ForestParams& params;
  int n;

  Tree tree;
  std::vector<double> gain;  // indexed by feature
  int sample_total = 0;

  // Scratch reused across nodes.
  std::vector<std::pair<double, double>> sorted;  // (feature value, target)

  struct Best {
    bool found = false;
    double wvar = 0.0;
    int feature = -1;
    double threshold = 0.0;
  };

  double node_variance(const std::vector<int>& idx, double& mean_out) const {
    double sum = 0.0, sum_sq = 0.0;
    for (int k : idx) {
      const double t = y[static_cast<std::size_t>(k)];
      sum += t;
      sum_sq += t * t;
    }
    const double m = static_cast<double>(idx.size());
    mean_out = sum / m;
    return std::max(0.0, sum_sq / m - mean_out * mean_out);
  }

  Best best_split(const std::vector<int>& idx) {
    Best best;
    const int m = static_cast<int>(idx.size());
    for (int f = 0; f < n; ++f) {
      sorted.clear();
      sorted.reserve(idx.size());
      double sum = 0.0, sum_sq = 0.0;
      for (int k : idx) {
        const double value = x[static_cast<std::size_t>(k)][static_cast<std::size_t>(f)];
        const double t = y[static_cast<std::size_t>(k)];
        sorted.emplace_back(value, t);
        sum += t;
        sum_sq += t * t;
      }
      std::sort(sorted.begin(), sorted.end());
      double left_sum = 0.0, left_sq = 0.0;
      for (int pos = 0; pos < m - 1; ++pos) {
        left_sum += sorted[static_cast<std::size_t>(pos)].second;
        left_sq += sorted[static_cast<std::size_t>(pos)].second *
                   sorted[static_cast<std::size_t>(pos)].second;
        const double lo = sorted[static_cast<std::size_t>(pos)].first;
        const double hi = sorted[static_cast<std::size_t>(pos) + 1].first;
        if (lo == hi) continue;  // only boundaries between distinct values
        const int nl = pos + 1;
        const int nr = m - nl;
        if (nl < params.min_leaf || nr < params.min_leaf) continue;
        const double right_sum = sum - left_sum;
        const double right_sq = sum_sq - left_sq;
        const double wvar =
            ((left_sq - left_sum * left_sum / nl) +
             (right_sq - right_sum * right_sum / nr)) /
            static_cast<double>(m);
        if (!best.found || wvar < best.wvar) {
          best.found = true;
          best.wvar = wvar;
          best.feature = f;
          best.threshold = lo + (hi - lo) / 2.0;
        }
      }
    }
    return best;
  }

  int build(const std::vector<int>& idx, int depth) {
    const int at = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    double mean = 0.0;
    const double var = node_variance(idx, mean);
    const int m = static_cast<int>(idx.size());

    Best best;
    if (depth < params.max_depth && var > 0.0 && m >= 2 * params.min_leaf) {
      best = best_split(idx);
    }
    if (!best.found) {
      TreeNode& leaf = tree.nodes[static_cast<std::size_t>(at)];
      leaf.feature = -1;
      leaf.prediction = mean;
      leaf.count = m;
      return at;
    }

    gain[static_cast<std::size_t>(best.feature)] +=
        std::max(0.0, var - best.wvar) *
        (static_cast<double>(m) / static_cast<double>(sample_total));

    std::vector<int> left_idx, right_idx;
    left_idx.reserve(idx.size());
    right_idx.reserve(idx.size());
    for (int k : idx) {
      if (x[static_cast<std::size_t>(k)][static_cast<std::size_t>(best.feature)] <=
          best.threshold) {
        left_idx.push_back(k);
      } else {
        right_idx.push_back(k);
      }
    }

    const int left = build(left_idx, depth + 1);
    const int right = build(right_idx, depth + 1);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(at)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    return at;
  }
};

}  // namespace

std::pair<EnsembleForest, FitReport> fit(const PerturbationSet& design,
                                         const ForestParams& params,
                                         unsigned threads) {
  if (!design.scores()) {
    throw ValidationError("fitting requires black-box scores on the design");
  }
  if (params.tree_count < 1) throw ValidationError("need S >= 1 trees");
  if (params.min_leaf < 1) throw ValidationError("need min_leaf >= 1");
  if (params.max_depth < 1) throw ValidationError("need max_depth >= 1");
  const int rows = design.sample_count();
  if (rows < 2 * params.min_leaf) {
    throw ValidationError("need K >= 2*min_leaf design rows");
  }

  const int n = design.n();
  std::vector<std::vector<double>> x;
  x.reserve(static_cast<std::size_t>(rows));
  for (int k = 0; k < rows; ++k) x.push_back(design.design_row(k));
  const std::vector<double>& y = *design.scores();

  std::vector<Tree> trees(static_cast<std::size_t>(params.tree_count));
  std::vector<std::vector<double>> gains(
      static_cast<std::size_t>(params.tree_count));
  parallel_for(static_cast<std::size_t>(params.tree_count), threads,
               [&](std::size_t t) {
                 Rng rng(split_seed(params.seed, t));
                 std::vector<int> idx(static_cast<std::size_t>(rows));
                 for (int k = 0; k < rows; ++k) {
                   idx[static_cast<std::size_t>(k)] = static_cast<int>(
                       rng.uniform_index(static_cast<std::uint64_t>(rows)));
                 }
                 TreeBuilder builder{x, y, params, n, {}, {}, rows, {}};
                 builder.gain.assign(static_cast<std::size_t>(n), 0.0);
                 builder.build(idx, 0);
                 trees[t] = std::move(builder.tree);
                 gains[t] = std::move(builder.gain);
               });

  // Mean gain over trees, accumulated in tree order.
  std::vector<double> gain_total(static_cast<std::size_t>(n), 0.0);
  for (const auto& g : gains) {
    for (int f = 0; f < n; ++f) {
      gain_total[static_cast<std::size_t>(f)] +=
          g[static_cast<std::size_t>(f)] /
          static_cast<double>(params.tree_count);
    }
  }

  EnsembleForest forest(n, params, std::move(trees),
                        std::vector<double>(static_cast<std::size_t>(n), 0.0),
                        std::move(gain_total));

  FitReport report;
  report.oob_available = false;
  for (const Tree& tree : forest.trees()) {
    report.per_tree_depth.push_back(tree.depth());
  }
  double mean_y = 0.0;
  for (double v : y) mean_y += v;
  mean_y /= static_cast<double>(rows);
  double ss_tot = 0.0, ss_res = 0.0;
  for (int k = 0; k < rows; ++k) {
    const double pred = forest.predict(x[static_cast<std::size_t>(k)]);
    ss_res += (y[static_cast<std::size_t>(k)] - pred) *
              (y[static_cast<std::size_t>(k)] - pred);
    ss_tot += (y[static_cast<std::size_t>(k)] - mean_y) *
              (y[static_cast<std::size_t>(k)] - mean_y);
  }
  if (ss_tot == 0.0) {
    report.r2_train = 0.0;
    report.degenerate_targets = true;
  } else {
    report.r2_train = 1.0 - ss_res / ss_tot;
  }
  return {std::move(forest), std::move(report)};
}

double coalition_value(const EnsembleForest& forest,
                       std::span<const double> instance,
                       const Coalition& coalition) {
  if (static_cast<int>(instance.size()) != forest.feature_count() ||
      coalition.arity() != forest.feature_count()) {
    throw ValidationError("instance/coalition arity must match the forest");
  }
  std::vector<double> x(forest.baseline());
  for (int j : coalition.members()) {
    x[static_cast<std::size_t>(j)] = instance[static_cast<std::size_t>(j)];
  }
  return forest.predict(x);
}

SurrogateValue::SurrogateValue(const EnsembleForest& forest,
                               std::vector<double> instance)
    : forest_(forest), instance_(std::move(instance)) {
  if (static_cast<int>(instance_.size()) != forest_.feature_count()) {
    throw ValidationError("instance length must match the forest");
  }
}

Attribution tree_gain_importance(const EnsembleForest& forest) {
  const std::vector<double>& totals = forest.gain_totals();
  Attribution out;
  out.method = AttributionMethod::TreeGain;
  out.phi.assign(static_cast<std::size_t>(forest.feature_count()), 0.0);
  if (totals.empty()) {
    throw ValidationError(
        "gain importance is only recorded on freshly fitted forests");
  }
  double total = 0.0;
  for (double g : totals) total += g;
  if (total > 0.0) {
    for (std::size_t f = 0; f < totals.size(); ++f) {
      out.phi[f] = totals[f] / total;
    }
  }
  return out;
}

}  // namespace realexp
