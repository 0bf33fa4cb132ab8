#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "realexp/blackbox.hpp"
#include "realexp/evaluation.hpp"
#include "realexp/forest.hpp"
#include "realexp/realexp.hpp"

namespace realexp {

// One reproducible explanation run: endpoint, instance, hyperparameters
// (defaults K=500, alpha=0.3, lambda=0.25, S=50), attribution method, seed.
struct RunConfig {
  ModelEndpoint endpoint;
  AdaptedInstance instance;
  int sample_count = kDefaultSampleCount;  // K
  double alpha = kDefaultAlpha;
  double lambda = kDefaultLambda;
  ForestParams forest;  // S, max_depth, min_leaf; seed comes from `seed`
  AttributionMethod method = AttributionMethod::RealExpDecoupled;
  std::optional<PermutationMode> perm_mode;  // RealExpPermutation only
  std::uint64_t seed = 0;
  std::optional<SimilarityMatrix> injected_similarity;
  double sigma_q2 = 0.05;  // MonteCarloRate policy in the stability study
  int top_k = 5;           // top-k set size for stability Jaccard
  nlohmann::json echo;     // raw config JSON, repeated verbatim in reports
};

RunConfig config_from_json(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

struct ImportanceReport {
  Attribution attribution;
  std::vector<int> ranking;  // stable argsort of phi, descending
  FitReport fit;
  double r2_holdout = 0.0;
  bool holdout_degenerate = false;
  std::string similarity_source;  // "estimated" | "injected" | "identity"
  SimilarityMatrix similarity{1};
  nlohmann::json config_echo;
  double timing_ms = 0.0;
};

nlohmann::json report_to_json(const ImportanceReport& report);

// Runs perturb -> re-score -> weight -> fit -> attribute. The forest trains
// on the first 80% of masks; the last 20% are the held-out fidelity split.
// Identical configs (seed included) produce identical reports minus timing,
// for any `threads`.
ImportanceReport explain(const RunConfig& config, unsigned threads = 1);

struct StabilityReport {
  int repeats = 0;
  int top_k = 0;
  double jaccard_fixed = 0.0;
  double jaccard_bernoulli = 0.0;
  double jaccard_mc = 0.0;
};

nlohmann::json stability_to_json(const StabilityReport& report);

// Re-runs explain with `repeats` distinct seeds under each masking policy
// and reports the mean top-k Jaccard per policy.
StabilityReport stability_study(const RunConfig& config, int repeats,
                                unsigned threads = 1);

// Truncates the ranking to the expert's m and scores consistency.
ConsistencyReport consistency_eval(const ImportanceReport& report,
                                   const ExpertAnnotation& expert);

}  // namespace realexp
