#include "realexp/perturbation.hpp"

#include <cmath>
#include <string>

#include "realexp/rng.hpp"

namespace realexp {

int Mask::masked_count() const {
  int zeros = 0;
  for (std::uint8_t bit : mu) zeros += (bit == 0);
  return zeros;
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= kMaxMaskRatio)) {
    throw ValidationError("mask ratio must satisfy 0 < alpha <= " +
                          std::to_string(kMaxMaskRatio));
  }
}

Mask fixed_count_mask(int n, int m, Rng& rng) {
  Mask mask;
  mask.mu.assign(static_cast<std::size_t>(n), 1);
  for (std::size_t pos : rng.sample_without_replacement(
           static_cast<std::size_t>(n), static_cast<std::size_t>(m))) {
    mask.mu[pos] = 0;
  }
  return mask;
}

Mask bernoulli_mask(int n, double rate, Rng& rng) {
  Mask mask;
  mask.mu.assign(static_cast<std::size_t>(n), 1);
  for (int j = 0; j < n; ++j) {
    if (rng.bernoulli(rate)) mask.mu[static_cast<std::size_t>(j)] = 0;
  }
  return mask;
}

}  // namespace

std::vector<Mask> generate_masks(int n, int count, double alpha,
                                 const MaskPolicy& policy,
                                 std::uint64_t seed) {
  if (n < 1) throw ValidationError("mask generation needs n >= 1");
  if (count < 1) throw ValidationError("mask generation needs K >= 1");
  check_alpha(alpha);

  Rng rng(seed);
  std::vector<Mask> masks;
  masks.reserve(static_cast<std::size_t>(count));

  if (std::holds_alternative<FixedCount>(policy)) {
    const int m = static_cast<int>(std::floor(alpha * n));
    if (m < 1) {
      throw ValidationError(
          "FixedCount is degenerate: floor(alpha*n) = 0 masked blocks");
    }
    for (int k = 0; k < count; ++k) masks.push_back(fixed_count_mask(n, m, rng));
    return masks;
  }

  if (std::holds_alternative<Bernoulli>(policy)) {
    for (int k = 0; k < count; ++k) masks.push_back(bernoulli_mask(n, alpha, rng));
    return masks;
  }

  const MonteCarloRate mc = std::get<MonteCarloRate>(policy);
  if (mc.sigma_q2 < 0.0) throw ValidationError("sigma_q2 must be >= 0");
  if (mc.sigma_q2 == 0.0) {
    // Degenerate rate distribution: constant q = alpha.
    for (int k = 0; k < count; ++k) masks.push_back(bernoulli_mask(n, alpha, rng));
    return masks;
  }
  const double spread = alpha * (1.0 - alpha);
  if (mc.sigma_q2 >= spread) {
    throw ValidationError(
        "sigma_q2 must be < alpha(1-alpha) for a Beta rate law");
  }
  // Beta with mean alpha and variance sigma_q2.
  const double scale = spread / mc.sigma_q2 - 1.0;
  const double a = alpha * scale;
  const double b = (1.0 - alpha) * scale;
  for (int k = 0; k < count; ++k) {
    const double q = rng.beta(a, b);
    masks.push_back(bernoulli_mask(n, q, rng));
  }
  return masks;
}

double similarity(const Mask& mask) {
  if (mask.arity() < 1) throw ValidationError("mask must be non-empty");
  return static_cast<double>(mask.kept_count()) /
         static_cast<double>(mask.arity());
}

double exp_weight(double sim, double lambda) {
  if (!(lambda > 0.0)) throw ValidationError("lambda must be > 0");
  if (!(sim >= 0.0 && sim <= 1.0)) {
    throw ValidationError("similarity must lie in [0,1]");
  }
  return std::exp(-lambda * (1.0 - sim));
}

PerturbationSet::PerturbationSet(std::vector<Mask> masks,
                                 std::optional<std::vector<double>> scores,
                                 double lambda, std::uint64_t seed)
    : lambda_(lambda), seed_(seed), masks_(std::move(masks)), scores_(std::move(scores)) {
  if (masks_.empty()) throw ValidationError("perturbation set needs K >= 1");
  if (!(lambda_ > 0.0)) throw ValidationError("lambda must be > 0");
  n_ = masks_.front().arity();
  if (n_ < 1) throw ValidationError("masks must cover n >= 1 blocks");
  sim_.reserve(masks_.size());
  weight_.reserve(masks_.size());
  for (const Mask& mask : masks_) {
    if (mask.arity() != n_) {
      throw ValidationError("all masks must share the same arity");
    }
    const double s = similarity(mask);
    sim_.push_back(s);
    weight_.push_back(exp_weight(s, lambda_));
  }
  if (scores_) {
    if (scores_->size() != masks_.size()) {
      throw ValidationError("score count must match mask count");
    }
    for (double y : *scores_) {
      if (!std::isfinite(y)) {
        throw ValidationError("scores must be finite");
      }
    }
  }
}

std::vector<double> PerturbationSet::design_row(int k) const {
  if (k < 0 || k >= sample_count()) {
    throw ValidationError("design row index out of range");
  }
  const Mask& mask = masks_[static_cast<std::size_t>(k)];
  const double adj = weight_[static_cast<std::size_t>(k)];
  std::vector<double> row(static_cast<std::size_t>(n_));
  for (int j = 0; j < n_; ++j) {
    row[static_cast<std::size_t>(j)] =
        mask.mu[static_cast<std::size_t>(j)] ? adj : 0.0;
  }
  return row;
}

PerturbationSet build_design(std::vector<Mask> masks, std::vector<double> scores,
                             double lambda, std::uint64_t seed) {
  if (scores.size() != masks.size()) {
    throw ValidationError("score count must match mask count");
  }
  return PerturbationSet(std::move(masks), std::move(scores), lambda, seed);
}

VarianceReport analytic_variance(const std::vector<double>& c, double f0,
                                 int n, double alpha, double sigma_q2) {
  (void)f0;  // a constant shift never moves a variance
  if (n < 2) throw ValidationError("variance formulas need n >= 2");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("variance formulas need 0 < alpha < 1");
  }
  if (sigma_q2 < 0.0) throw ValidationError("sigma_q2 must be >= 0");
  if (static_cast<int>(c.size()) != n) {
    throw ValidationError("contribution vector must have n entries");
  }
  double sum = 0.0, sum_sq = 0.0;
  for (double v : c) {
    sum += v;
    sum_sq += v * v;
  }
  const double nn = static_cast<double>(n);
  VarianceReport report;
  report.n = n;
  report.alpha = alpha;
  report.sigma_q2 = sigma_q2;
  report.analytic_fixed =
      alpha * (1.0 - alpha) *
      ((1.0 + 1.0 / (nn - 1.0)) * sum_sq - (1.0 / (nn - 1.0)) * sum * sum);
  report.analytic_random = alpha * (1.0 - alpha) * sum_sq;
  report.analytic_mc = (alpha * (1.0 - alpha) + sigma_q2) * sum_sq;
  report.ordering_inverted = report.analytic_fixed > report.analytic_random;
  return report;
}

namespace {

double linear_f(const std::vector<double>& c, double f0, const Mask& mask) {
  double out = f0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (mask.mu[j]) out += c[j];
  }
  return out;
}

double sample_variance(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / (n - 1.0);
}

}  // namespace

VarianceReport empirical_variance(const std::vector<double>& c, double f0,
                                  int n, double alpha, double sigma_q2,
                                  std::uint64_t samples, std::uint64_t seed) {
  if (samples < 1000) {
    throw ValidationError("empirical variance needs samples >= 1000");
  }
  VarianceReport report = analytic_variance(c, f0, n, alpha, sigma_q2);
  report.sample_count = samples;
  report.seed = seed;

  const int count = static_cast<int>(samples);
  const MaskPolicy policies[3] = {FixedCount{}, Bernoulli{},
                                  MonteCarloRate{sigma_q2}};
  double* slots[3] = {&report.empirical_fixed, &report.empirical_random,
                      &report.empirical_mc};
  for (int p = 0; p < 3; ++p) {
    const std::vector<Mask> masks =
        generate_masks(n, count, alpha, policies[p], split_seed(seed, static_cast<std::uint64_t>(p)));
    std::vector<double> f_vals;
    f_vals.reserve(masks.size());
    for (const Mask& mask : masks) f_vals.push_back(linear_f(c, f0, mask));
    *slots[p] = sample_variance(f_vals);
  }
  return report;
}

}  // namespace realexp
