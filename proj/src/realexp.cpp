#include "realexp/realexp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "realexp/rng.hpp"

namespace realexp {

namespace {

void check_similarity(const SimilarityMatrix& s, int n) {
  if (s.size() != n) {
    throw ValidationError("similarity matrix size " + std::to_string(s.size()) +
                          " does not match n = " + std::to_string(n));
  }
}

double checked_value(const ValueFunction& v, const Coalition& c) {
  const double out = v.value(c);
  if (!std::isfinite(out)) {
    throw EvaluationError("value function returned non-finite payoff on " +
                          c.to_string());
  }
  return out;
}

}  // namespace

Attribution realexp_decoupled(const ValueFunction& v, int n,
                              const SimilarityMatrix& s) {
  if (n < 1) throw ValidationError("need n >= 1");
  if (v.arity() != n) {
    throw ValidationError("value function arity does not match n");
  }
  check_similarity(s, n);

  const double v_empty = checked_value(v, Coalition::empty(n));
  std::vector<double> v_single(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    v_single[static_cast<std::size_t>(i)] =
        checked_value(v, Coalition::of(n, {i}));
  }

  Attribution out;
  out.method = AttributionMethod::RealExpDecoupled;
  out.phi.assign(static_cast<std::size_t>(n), 0.0);
  out.phi_independent = std::vector<double>(static_cast<std::size_t>(n), 0.0);
  out.phi_margin = std::vector<double>(static_cast<std::size_t>(n), 0.0);
  out.margin_degenerate.assign(static_cast<std::size_t>(n), false);

  for (int i = 0; i < n; ++i) {
    const double independent = v_single[static_cast<std::size_t>(i)] - v_empty;
    double denom = 0.0;
    for (int k = 0; k < n; ++k) {
      if (k != i) denom += 1.0 - s.at(i, k);
    }
    double margin = 0.0;
    if (n > 1 && denom == 0.0) {
      // Perfectly correlated with every other feature: no attributable
      // interaction, flagged instead of dividing by zero.
      out.margin_degenerate[static_cast<std::size_t>(i)] = true;
    } else if (n > 1) {
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double w = (1.0 - s.at(i, j)) / denom;
        if (w == 0.0) continue;
        const double pair =
            checked_value(v, Coalition::of(n, {i, j}));
        margin +=
            w * (pair - v_single[static_cast<std::size_t>(j)] - independent);
      }
    }
    (*out.phi_independent)[static_cast<std::size_t>(i)] = independent;
    (*out.phi_margin)[static_cast<std::size_t>(i)] = margin;
    out.phi[static_cast<std::size_t>(i)] = independent + margin;
  }
  return out;
}

double adjustment_factor(const Coalition& prefix, int i,
                         const SimilarityMatrix& s) {
  check_similarity(s, prefix.arity());
  if (prefix.contains(i)) {
    throw ValidationError("feature " + std::to_string(i) +
                          " must not belong to the prefix");
  }
  double factor = 1.0;
  for (int j : prefix.members()) factor *= 1.0 - s.at(i, j);
  return factor;
}

Attribution realexp_permutation(const ValueFunction& v, int n,
                                const SimilarityMatrix& s,
                                const PermutationMode& mode) {
  if (n < 1) throw ValidationError("need n >= 1");
  if (v.arity() != n) {
    throw ValidationError("value function arity does not match n");
  }
  check_similarity(s, n);

  Attribution out;
  out.method = AttributionMethod::RealExpPermutation;
  out.phi.assign(static_cast<std::size_t>(n), 0.0);

  if (std::holds_alternative<Exhaustive>(mode)) {
    if (n > kExhaustivePermutationCap) {
      throw CapacityError("exhaustive permutations capped at n <= " +
                          std::to_string(kExhaustivePermutationCap));
    }
    const std::vector<double> table = tabulate_values(v, n);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::uint64_t total = 0;
    do {
      std::uint64_t prefix = 0;
      double prev = table[0];
      for (int pos = 0; pos < n; ++pos) {
        const int i = perm[static_cast<std::size_t>(pos)];
        const double cur = table[prefix | (std::uint64_t{1} << i)];
        double factor = 1.0;
        for (int q = 0; q < pos; ++q) {
          factor *= 1.0 - s.at(i, perm[static_cast<std::size_t>(q)]);
        }
        out.phi[static_cast<std::size_t>(i)] += (cur - prev) * factor;
        prefix |= std::uint64_t{1} << i;
        prev = cur;
      }
      ++total;
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (double& p : out.phi) p /= static_cast<double>(total);
    return out;
  }

  const Sampled sampled = std::get<Sampled>(mode);
  if (sampled.count < 1) {
    throw ValidationError("sampled mode needs count >= 1");
  }
  Rng rng(sampled.seed);
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  for (std::uint64_t k = 0; k < sampled.count; ++k) {
    rng.shuffle(perm);
    Coalition prefix(n);
    double prev = checked_value(v, prefix);
    for (int pos = 0; pos < n; ++pos) {
      const int i = perm[static_cast<std::size_t>(pos)];
      double factor = 1.0;
      for (int q = 0; q < pos; ++q) {
        factor *= 1.0 - s.at(i, perm[static_cast<std::size_t>(q)]);
      }
      prefix.insert(i);
      const double cur = checked_value(v, prefix);
      out.phi[static_cast<std::size_t>(i)] += (cur - prev) * factor;
      prev = cur;
    }
  }
  for (double& p : out.phi) p /= static_cast<double>(sampled.count);
  return out;
}

SimilarityMatrix estimate_similarity(const PerturbationSet& design) {
  const int n = design.n();
  const int count = design.sample_count();
  if (count < 2) {
    throw ValidationError(
        "similarity estimation needs at least 2 perturbation samples");
  }
  if (n < 2) {
    throw ValidationError("similarity estimation needs at least 2 features");
  }

  const std::vector<double>& w = design.weight();
  double w_total = 0.0;
  for (double wk : w) w_total += wk;

  // Weighted column means of the raw masks.
  std::vector<double> mean(static_cast<std::size_t>(n), 0.0);
  for (int k = 0; k < count; ++k) {
    const Mask& mask = design.masks()[static_cast<std::size_t>(k)];
    for (int j = 0; j < n; ++j) {
      if (mask.mu[static_cast<std::size_t>(j)]) {
        mean[static_cast<std::size_t>(j)] += w[static_cast<std::size_t>(k)];
      }
    }
  }
  for (double& m : mean) m /= w_total;

  // Weighted cross-moments.
  std::vector<double> cov(static_cast<std::size_t>(n) * n, 0.0);
  for (int k = 0; k < count; ++k) {
    const Mask& mask = design.masks()[static_cast<std::size_t>(k)];
    const double wk = w[static_cast<std::size_t>(k)];
    for (int i = 0; i < n; ++i) {
      const double di =
          (mask.mu[static_cast<std::size_t>(i)] ? 1.0 : 0.0) -
          mean[static_cast<std::size_t>(i)];
      for (int j = i; j < n; ++j) {
        const double dj =
            (mask.mu[static_cast<std::size_t>(j)] ? 1.0 : 0.0) -
            mean[static_cast<std::size_t>(j)];
        cov[static_cast<std::size_t>(i) * n + j] += wk * di * dj;
      }
    }
  }

  SimilarityMatrix s(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double var_i = cov[static_cast<std::size_t>(i) * n + i];
      const double var_j = cov[static_cast<std::size_t>(j) * n + j];
      double value = 0.0;  // zero-variance columns stay at 0 off-diagonal
      if (var_i > 0.0 && var_j > 0.0) {
        value = std::abs(cov[static_cast<std::size_t>(i) * n + j]) /
                std::sqrt(var_i * var_j);
        value = std::clamp(value, 0.0, 1.0);
      }
      s.set(i, j, value);
    }
  }
  return s;
}

}  // namespace realexp
