#include "realexp/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "realexp/parallel.hpp"
#include "realexp/rng.hpp"

namespace realexp {

namespace {

void check_arity(const ValueFunction& v, int n) {
  if (n < 1) throw ValidationError("need n >= 1");
  if (v.arity() != n) {
    throw ValidationError("value function arity " + std::to_string(v.arity()) +
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

// zeta(s) = s!(n-s-1)!/n! = 1/(n * C(n-1, s)); the binomial stays exact in
// double for n <= 20.
std::vector<double> subset_weights(int n) {
  std::vector<double> zeta(static_cast<std::size_t>(n));
  double binom = 1.0;  // C(n-1, s)
  for (int s = 0; s < n; ++s) {
    zeta[static_cast<std::size_t>(s)] = 1.0 / (static_cast<double>(n) * binom);
    binom = binom * static_cast<double>(n - 1 - s) / static_cast<double>(s + 1);
  }
  return zeta;
}

}  // namespace

std::vector<double> tabulate_values(const ValueFunction& v, int n,
                                    unsigned threads) {
  check_arity(v, n);
  if (n > kExactShapleyCap) {
    throw CapacityError("value tabulation capped at n <= " +
                        std::to_string(kExactShapleyCap));
  }
  const std::size_t size = std::size_t{1} << n;
  std::vector<double> table(size);
  parallel_for(size, threads, [&](std::size_t mask) {
    table[mask] = checked_value(v, Coalition::from_mask(n, mask));
  });
  return table;
}

Attribution exact_shapley(const ValueFunction& v, int n, unsigned threads) {
  check_arity(v, n);
  if (n > kExactShapleyCap) {
    throw CapacityError("exact Shapley capped at n <= " +
                        std::to_string(kExactShapleyCap) +
                        " (2^n value evaluations), got n = " +
                        std::to_string(n));
  }
  const std::vector<double> table = tabulate_values(v, n, threads);
  const std::vector<double> zeta = subset_weights(n);

  Attribution out;
  out.method = AttributionMethod::ExactShapley;
  out.phi.assign(static_cast<std::size_t>(n), 0.0);
  const std::uint64_t all = (std::uint64_t{1} << n) - 1;
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t fi) {
    const int i = static_cast<int>(fi);
    const std::uint64_t bit = std::uint64_t{1} << i;
    const std::uint64_t rest = all & ~bit;
    double acc = 0.0;
    // Enumerate subsets of F\{i} by iterating sub-masks of `rest`.
    std::uint64_t sub = 0;
    while (true) {
      const int size = static_cast<int>(std::popcount(sub));
      acc += zeta[static_cast<std::size_t>(size)] *
             (table[sub | bit] - table[sub]);
      if (sub == rest) break;
      sub = (sub - rest) & rest;
    }
    out.phi[fi] = acc;
  });
  return out;
}

Attribution permutation_shapley(const ValueFunction& v, int n,
                                const PermutationMode& mode) {
  check_arity(v, n);

  Attribution out;
  out.method = AttributionMethod::PermSampledShapley;
  out.phi.assign(static_cast<std::size_t>(n), 0.0);

  if (std::holds_alternative<Exhaustive>(mode)) {
    if (n > kExhaustivePermutationCap) {
      throw CapacityError("exhaustive permutations capped at n <= " +
                          std::to_string(kExhaustivePermutationCap) +
                          " (n! orderings), got n = " + std::to_string(n));
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
        const std::uint64_t next = prefix | (std::uint64_t{1} << i);
        const double cur = table[next];
        out.phi[static_cast<std::size_t>(i)] += cur - prev;
        prefix = next;
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
  Coalition prefix(n);
  for (std::uint64_t s = 0; s < sampled.count; ++s) {
    rng.shuffle(perm);
    prefix = Coalition::empty(n);
    double prev = checked_value(v, prefix);
    for (int pos = 0; pos < n; ++pos) {
      const int i = perm[static_cast<std::size_t>(pos)];
      prefix.insert(i);
      const double cur = checked_value(v, prefix);
      out.phi[static_cast<std::size_t>(i)] += cur - prev;
      prev = cur;
    }
  }
  for (double& p : out.phi) p /= static_cast<double>(sampled.count);
  return out;
}

Attribution dilution_demo(double delta, double epsilon, int n) {
  const DilutionGame game(delta, epsilon, n);
  return exact_shapley(game, n);
}

}  // namespace realexp
