#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "realexp/coalition.hpp"
#include "realexp/perturbation.hpp"

namespace realexp {

// Flat tree node: feature >= 0 marks an internal node routing
// x[feature] <= threshold to `left`, else `right`; feature == -1 marks a
// leaf carrying the mean target of its training samples.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double prediction = 0.0;
  int count = 0;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // root at index 0

  double predict(std::span<const double> x) const;
  int depth() const;
};

struct ForestParams {
  int tree_count = 50;  // S
  int max_depth = 12;
  int min_leaf = 2;
  std::uint64_t seed = 0;
};

struct FitReport {
  double r2_train = 0.0;
  std::vector<int> per_tree_depth;
  bool oob_available = false;
  bool degenerate_targets = false;  // zero target variance: r2 = 0 by convention
};

// Bagged ensemble of variance-minimizing regression trees; prediction is the
// unweighted mean over trees.
class EnsembleForest {
 public:
  EnsembleForest(int n, ForestParams params, std::vector<Tree> trees,
                 std::vector<double> baseline,
                 std::vector<double> gain_importance = {});

  int feature_count() const { return n_; }
  const ForestParams& params() const { return params_; }
  const std::vector<Tree>& trees() const { return trees_; }
  const std::vector<double>& baseline() const { return baseline_; }
  // Per-feature variance-reduction totals recorded at fit time; empty for
  // forests restored from JSON.
  const std::vector<double>& gain_totals() const { return gain_importance_; }

  double predict(std::span<const double> x) const;

 private:
  int n_;
  ForestParams params_;
  std::vector<Tree> trees_;
  std::vector<double> baseline_;
  std::vector<double> gain_importance_;
};

// Fits one tree per bootstrap resample of the design (Eq.-5 splits: minimize
// the child-fraction-weighted target variance; candidate thresholds are
// midpoints between consecutive distinct values; ties break on lowest
// feature, then lowest threshold). Per-tree seeds derive from params.seed by
// tree index, so any `threads` value fits the same forest.
std::pair<EnsembleForest, FitReport> fit(const PerturbationSet& design,
                                         const ForestParams& params,
                                         unsigned threads = 1);

// v(S) = predict on the vector that keeps instance[j] for j in S and falls
// back to the forest baseline elsewhere.
double coalition_value(const EnsembleForest& forest,
                       std::span<const double> instance,
                       const Coalition& coalition);

// ValueFunction adapter so the attribution routines can explain a surrogate.
class SurrogateValue : public ValueFunction {
 public:
  SurrogateValue(const EnsembleForest& forest, std::vector<double> instance);

  int arity() const override { return forest_.feature_count(); }
  double value(const Coalition& coalition) const override {
    return coalition_value(forest_, instance_, coalition);
  }

 private:
  const EnsembleForest& forest_;
  std::vector<double> instance_;
};

// Split-variance-reduction importance, normalized to sum to 1 when any gain
// was recorded. Baseline comparator for the RealExp scores.
Attribution tree_gain_importance(const EnsembleForest& forest);

}  // namespace realexp
