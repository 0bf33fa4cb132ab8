#pragma once

#include <set>
#include <string>
#include <vector>

#include "realexp/errors.hpp"

namespace realexp {

// Expert-selected items, most-important first. Order is significant.
struct ExpertAnnotation {
  std::vector<int> items;

  explicit ExpertAnnotation(std::vector<int> ordered_items);
  int size() const { return static_cast<int>(items.size()); }
};

// Model's top-m items by descending attribution.
struct ModelRanking {
  std::vector<int> items;

  explicit ModelRanking(std::vector<int> ordered_items);
  int size() const { return static_cast<int>(items.size()); }
};

struct ConsistencyReport {
  int match_count = 0;
  double accuracy = 0.0;
  double tau = 0.0;
  bool tau_defined = false;  // |H| >= 2
  int concordant = 0;
  int discordant = 0;
};

// Matching count |H| = |expert ∩ model| (as sets) and accuracy |H|/m.
std::pair<int, double> h_score(const ExpertAnnotation& expert,
                               const ModelRanking& model);

// Kendall's tau over the matched set H: pairs ordered by expert rank,
// concordant when the model agrees, tau = 2(C-D)/(|H|(|H|-1)). |H| <= 1
// leaves tau undefined and reported as 0 with the flag cleared.
ConsistencyReport kendall_tau(const ExpertAnnotation& expert,
                              const ModelRanking& model);

// Mean Jaccard |A∩B|/|A∪B| over all unordered pairs of runs.
double jaccard_stability(const std::vector<std::set<int>>& runs);

struct R2Result {
  double value = 0.0;
  bool degenerate = false;  // zero-variance actuals: 0 by convention
};

R2Result r_squared(const std::vector<double>& actual,
                   const std::vector<double>& predicted);

// FNV-1a over the item list; recorded in consistency reports so a report can
// be traced back to its inputs.
std::string items_hash(const std::vector<int>& items);

}  // namespace realexp
