#pragma once

#include "realexp/coalition.hpp"
#include "realexp/perturbation.hpp"
#include "realexp/shapley.hpp"

namespace realexp {

// Decoupled RealExp score:
//   phi_i^independent = v({i}) - v(empty)
//   w_{i,j}           = (1 - s_{i,j}) / sum_{k != i} (1 - s_{i,k})
//   phi_i^Margin      = sum_{j != i} w_{i,j} [v({i,j}) - v({j}) - phi_i^ind]
//   phi_i             = phi_i^independent + phi_i^Margin
// A feature whose weight denominator collapses to zero (similarity 1 with
// every other feature) gets phi^Margin = 0 and its margin_degenerate flag
// set.
Attribution realexp_decoupled(const ValueFunction& v, int n,
                              const SimilarityMatrix& s);

// Adjustment factor Upsilon(prefix, i) = prod over j in prefix of
// (1 - s_{i,j}); the empty prefix gives 1. i must not be in the prefix.
double adjustment_factor(const Coalition& prefix, int i,
                         const SimilarityMatrix& s);

// Permutation-form RealExp:
//   phi_i = (1/n!) sum over orderings of Delta_v(i, prefix) *
//           Upsilon(prefix, i)
// Normalized by n! exactly as written, with no renormalization by the
// Upsilon mass.
Attribution realexp_permutation(const ValueFunction& v, int n,
                                const SimilarityMatrix& s,
                                const PermutationMode& mode);

// Similarity estimated from a perturbation design: |Pearson correlation|
// between mask columns, weighted per sample by adj_k, clamped to [0,1].
// Zero-variance columns get 0 off-diagonal; the diagonal is forced to 1.
SimilarityMatrix estimate_similarity(const PerturbationSet& design);

}  // namespace realexp
