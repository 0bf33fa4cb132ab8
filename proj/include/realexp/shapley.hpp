#pragma once

#include <cstdint>
#include <optional>
#include <variant>

#include "realexp/coalition.hpp"

namespace realexp {

// Permutation-form evaluation mode: full enumeration of all n! orderings, or
// a seeded uniform sample of `count` orderings.
struct Exhaustive {};
struct Sampled {
  std::uint64_t count = 1;
  std::uint64_t seed = 0;
};
using PermutationMode = std::variant<Exhaustive, Sampled>;

inline constexpr int kExactShapleyCap = 20;       // 2^n value evaluations
inline constexpr int kExhaustivePermutationCap = 10;  // n! permutations

// Subset-form Shapley values:
//   Sv(i) = sum over S subseteq F\{i} of
//           |S|!(n-|S|-1)!/n! * [v(S u {i}) - v(S)]
// Requires n <= 20. `threads` only parallelizes the value-table fill over
// pre-allocated slots, so the result is identical for any thread count.
Attribution exact_shapley(const ValueFunction& v, int n, unsigned threads = 1);

// Permutation-form Shapley values: the average marginal contribution over
// feature orderings, exhaustively (n <= 10) or by seeded uniform sampling.
Attribution permutation_shapley(const ValueFunction& v, int n,
                                const PermutationMode& mode);

// Builds the two-regime duplicate-feature game (see DilutionGame) and runs
// exact Shapley on it; the duplicated feature comes out at delta/2 +
// epsilon/2.
Attribution dilution_demo(double delta, double epsilon, int n);

// Full value table over all 2^n coalitions, index = coalition bitmask.
// Throws EvaluationError naming the coalition if v produces a non-finite
// value.
std::vector<double> tabulate_values(const ValueFunction& v, int n,
                                    unsigned threads = 1);

}  // namespace realexp
