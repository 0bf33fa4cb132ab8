#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "realexp/errors.hpp"

namespace realexp {

// One perturbation mask over n blocks: mu[j] = 1 keeps block j, 0 masks it.
struct Mask {
  std::vector<std::uint8_t> mu;

  int arity() const { return static_cast<int>(mu.size()); }
  int masked_count() const;
  int kept_count() const { return arity() - masked_count(); }
};

// Mask-generation policies. FixedCount masks exactly floor(alpha*n) blocks
// and is the only policy the explanation pipeline uses; the other two exist
// for the variance study.
struct FixedCount {};
struct Bernoulli {};
struct MonteCarloRate {
  double sigma_q2 = 0.0;  // variance of the per-mask Beta masking rate
};
using MaskPolicy = std::variant<FixedCount, Bernoulli, MonteCarloRate>;

inline constexpr double kMaxMaskRatio = 0.3;  // hard cap: at most 30% masked
inline constexpr double kDefaultAlpha = 0.3;
inline constexpr double kDefaultLambda = 0.25;
inline constexpr int kDefaultSampleCount = 500;

std::vector<Mask> generate_masks(int n, int count, double alpha,
                                 const MaskPolicy& policy, std::uint64_t seed);

// Kept fraction sim = |mu|_1 / n in [0,1].
double similarity(const Mask& mask);

// adj = exp(-lambda * (1 - sim)); equals 1 iff sim = 1.
double exp_weight(double sim, double lambda);

// The surrogate's training data: K masks, their similarities and exponential
// weights, the weighted design rows adj_k * mu^(k), and the black-box scores.
class PerturbationSet {
 public:
  PerturbationSet(std::vector<Mask> masks, std::optional<std::vector<double>> scores,
                  double lambda, std::uint64_t seed);

  int n() const { return n_; }
  int sample_count() const { return static_cast<int>(masks_.size()); }
  double lambda() const { return lambda_; }
  std::uint64_t seed() const { return seed_; }

  const std::vector<Mask>& masks() const { return masks_; }
  const std::vector<double>& sim() const { return sim_; }
  const std::vector<double>& weight() const { return weight_; }
  const std::optional<std::vector<double>>& scores() const { return scores_; }

  // Row k of the weighted design: adj_k * mu^(k), entries in [0,1].
  std::vector<double> design_row(int k) const;

 private:
  int n_;
  double lambda_;
  std::uint64_t seed_;
  std::vector<Mask> masks_;
  std::vector<double> sim_;
  std::vector<double> weight_;
  std::optional<std::vector<double>> scores_;
};

// Convenience constructor used by the pipeline: scores must align with masks.
PerturbationSet build_design(std::vector<Mask> masks, std::vector<double> scores,
                             double lambda, std::uint64_t seed = 0);

// Proof-4 variance study on the linear stand-in f(mask) = f0 + sum c_j mu_j.
struct VarianceReport {
  double analytic_fixed = 0.0;
  double analytic_random = 0.0;
  double analytic_mc = 0.0;
  double empirical_fixed = 0.0;
  double empirical_random = 0.0;
  double empirical_mc = 0.0;
  int n = 0;
  double alpha = 0.0;
  double sigma_q2 = 0.0;
  std::uint64_t sample_count = 0;
  std::uint64_t seed = 0;
  // Sign-mixed contribution regime where the printed fixed-vs-random
  // ordering inverts; reported so the demo can flag it.
  bool ordering_inverted = false;
};

// Fills the three analytic fields:
//   fixed  : alpha(1-alpha) [(1 + 1/(n-1)) sum c^2 - (1/(n-1)) (sum c)^2]
//   random : alpha(1-alpha) sum c^2
//   mc     : (alpha(1-alpha) + sigma_q2) sum c^2
VarianceReport analytic_variance(const std::vector<double>& c, double f0,
                                 int n, double alpha, double sigma_q2);

// Draws `samples` masks per policy, evaluates the linear f, and adds the
// sample variances to the analytic report.
VarianceReport empirical_variance(const std::vector<double>& c, double f0,
                                  int n, double alpha, double sigma_q2,
                                  std::uint64_t samples, std::uint64_t seed);

}  // namespace realexp
