#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "realexp/json_io.hpp"
#include "realexp/realexp.hpp"
#include "realexp/rng.hpp"
#include "realexp/shapley.hpp"

using namespace realexp;

namespace {

const std::string kFixtures = REALEXP_FIXTURE_DIR;

TableGame random_game(int n, Rng& rng) {
  std::vector<double> values(std::size_t{1} << n);
  for (double& v : values) v = rng.uniform_real(-1.0, 1.0);
  return TableGame(n, std::move(values));
}

// Independent permutation-average oracle (Eq.-2 form written from scratch):
// walks every ordering with explicit Coalition prefixes.
std::vector<double> perm_average_oracle(const ValueFunction& v, int n) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
  long permutations = 0;
  do {
    Coalition prefix(n);
    double prev = v.value(prefix);
    for (int i : perm) {
      prefix.insert(i);
      const double cur = v.value(prefix);
      acc[static_cast<std::size_t>(i)] += cur - prev;
      prev = cur;
    }
    ++permutations;
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (double& a : acc) a /= static_cast<double>(permutations);
  return acc;
}

// Swaps the roles of features 0 and 1 in a coalition bitmask.
std::uint64_t swap01(std::uint64_t mask) {
  const std::uint64_t b0 = (mask >> 0) & 1, b1 = (mask >> 1) & 1;
  return (mask & ~std::uint64_t{3}) | (b1 << 0) | (b0 << 1);
}

}  // namespace

TEST_CASE("coalition basics") {
  Coalition c = Coalition::of(5, {0, 3});
  CHECK(c.contains(0));
  CHECK(c.contains(3));
  CHECK_FALSE(c.contains(1));
  CHECK(c.count() == 2);
  CHECK(c.mask64() == 0b01001);
  CHECK(c.to_string() == "{0,3}");
  CHECK(Coalition::full(3).mask64() == 0b111);
  CHECK(Coalition::from_mask(3, 0b101).members() == std::vector<int>{0, 2});
  CHECK_THROWS_AS(Coalition::from_mask(3, 0b1000), ValidationError);
  CHECK_THROWS_AS(c.insert(5), ValidationError);
}

TEST_CASE("symmetric additive game attributes equally") {
  // v(empty)=0, v({0})=v({1})=1, v({0,1})=2
  const TableGame game(2, {0.0, 1.0, 1.0, 2.0});
  const Attribution exact = exact_shapley(game, 2);
  CHECK(std::abs(exact.phi[0] - 1.0) <= 1e-12);
  CHECK(std::abs(exact.phi[1] - 1.0) <= 1e-12);

  const Attribution perm = permutation_shapley(game, 2, Exhaustive{});
  CHECK(std::abs(perm.phi[0] - 1.0) <= 1e-12);
  CHECK(std::abs(perm.phi[1] - 1.0) <= 1e-12);
}

TEST_CASE("constant game gives the null attribution") {
  const TableGame game(3, std::vector<double>(8, 4.25));
  for (double phi : exact_shapley(game, 3).phi) CHECK(phi == 0.0);
}

TEST_CASE("weighted-majority fixture matches the permutation oracle") {
  const TableGame game =
      load_game_fixture(kFixtures + "/weighted_majority.json");
  const Attribution exact = exact_shapley(game, game.arity());
  const std::vector<double> oracle = perm_average_oracle(game, game.arity());
  REQUIRE(exact.phi.size() == oracle.size());
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    CHECK(std::abs(exact.phi[i] - oracle[i]) <= 1e-9);
  }
  // Frozen from the oracle: pivotal orderings give (2/3, 1/6, 1/6).
  CHECK(std::abs(exact.phi[0] - 2.0 / 3.0) <= 1e-12);
  CHECK(std::abs(exact.phi[1] - 1.0 / 6.0) <= 1e-12);
  CHECK(std::abs(exact.phi[2] - 1.0 / 6.0) <= 1e-12);
}

TEST_CASE("sampled permutation Shapley converges at Monte-Carlo rate") {
  const TableGame game =
      load_game_fixture(kFixtures + "/weighted_majority.json");
  const int n = game.arity();
  const Attribution exhaustive = permutation_shapley(game, n, Exhaustive{});
  const std::uint64_t count = 10000;
  const Attribution sampled = permutation_shapley(game, n, Sampled{count, 7});

  // Per-feature standard error from the per-permutation marginal spread,
  // enumerated independently.
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> sum(static_cast<std::size_t>(n), 0.0),
      sum_sq(static_cast<std::size_t>(n), 0.0);
  long permutations = 0;
  do {
    Coalition prefix(n);
    double prev = game.value(prefix);
    for (int i : perm) {
      prefix.insert(i);
      const double delta = game.value(prefix) - prev;
      sum[static_cast<std::size_t>(i)] += delta;
      sum_sq[static_cast<std::size_t>(i)] += delta * delta;
      prev += delta;
    }
    ++permutations;
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (int i = 0; i < n; ++i) {
    const double mean = sum[static_cast<std::size_t>(i)] / permutations;
    const double var =
        sum_sq[static_cast<std::size_t>(i)] / permutations - mean * mean;
    const double se =
        std::sqrt(std::max(0.0, var) / static_cast<double>(count));
    CHECK(std::abs(sampled.phi[static_cast<std::size_t>(i)] -
                   exhaustive.phi[static_cast<std::size_t>(i)]) <= 3.0 * se);
  }
}

TEST_CASE("sampled modes are bit-reproducible") {
  const TableGame game =
      load_game_fixture(kFixtures + "/weighted_majority.json");
  const Attribution a = permutation_shapley(game, 3, Sampled{500, 42});
  const Attribution b = permutation_shapley(game, 3, Sampled{500, 42});
  CHECK(a.phi == b.phi);
  const SimilarityMatrix s(3);
  const Attribution c = realexp_permutation(game, 3, s, Sampled{500, 42});
  const Attribution d = realexp_permutation(game, 3, s, Sampled{500, 42});
  CHECK(c.phi == d.phi);
}

TEST_CASE("exact Shapley is identical under any parallelism") {
  Rng rng(2024);
  const TableGame game = random_game(8, rng);
  const Attribution one = exact_shapley(game, 8, 1);
  const Attribution four = exact_shapley(game, 8, 4);
  CHECK(one.phi == four.phi);
}

TEST_CASE("capacity and evaluation errors") {
  const LambdaGame big(21, [](const Coalition&) { return 0.0; });
  CHECK_THROWS_AS(exact_shapley(big, 21), CapacityError);

  const LambdaGame nan_game(2, [](const Coalition& c) {
    return c.count() == 2 ? std::nan("") : 0.0;
  });
  CHECK_THROWS_WITH_AS(exact_shapley(nan_game, 2), doctest::Contains("{0,1}"),
                       EvaluationError);

  const TableGame game(2, {0.0, 1.0, 1.0, 2.0});
  CHECK_THROWS_AS(permutation_shapley(game, 2, Sampled{0, 1}),
                  ValidationError);
  const LambdaGame wide(11, [](const Coalition&) { return 0.0; });
  CHECK_THROWS_AS(permutation_shapley(wide, 11, Exhaustive{}), CapacityError);
}

TEST_CASE("dilution: duplicate features split the credit") {
  SUBCASE("paper case: delta=1, epsilon=0 halves the value") {
    const Attribution a = dilution_demo(1.0, 0.0, 2);
    CHECK(std::abs(a.phi[0] - 0.5) <= 1e-12);
    CHECK(std::abs(a.phi[1] - 0.5) <= 1e-12);
  }
  SUBCASE("no dilution when both regimes agree") {
    const Attribution a = dilution_demo(1.0, 1.0, 2);
    CHECK(std::abs(a.phi[0] - 1.0) <= 1e-12);
  }
  SUBCASE("generic evaluation of delta/2 + epsilon/2") {
    const Attribution a = dilution_demo(0.8, 0.1, 2);
    CHECK(std::abs(a.phi[0] - 0.45) <= 1e-12);
  }
  SUBCASE("null tail features stay at zero") {
    const Attribution a = dilution_demo(0.6, 0.2, 5);
    CHECK(std::abs(a.phi[0] - 0.4) <= 1e-12);
    CHECK(std::abs(a.phi[1] - 0.4) <= 1e-12);
    for (int i = 2; i < 5; ++i) {
      CHECK(std::abs(a.phi[static_cast<std::size_t>(i)]) <= 1e-12);
    }
  }
}

TEST_CASE("exact Shapley axioms on seeded random games") {
  Rng rng(99);
  for (int round = 0; round < 100; ++round) {
    const int n = 2 + static_cast<int>(rng.uniform_index(7));  // 2..8
    const TableGame game = random_game(n, rng);
    const Attribution exact = exact_shapley(game, n);

    // Efficiency.
    const double total =
        std::accumulate(exact.phi.begin(), exact.phi.end(), 0.0);
    const double span =
        game.value(Coalition::full(n)) - game.value(Coalition::empty(n));
    CHECK(std::abs(total - span) <= 1e-9);

    // Eq. (1) == Eq. (2).
    const Attribution perm = permutation_shapley(game, n, Exhaustive{});
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(exact.phi[static_cast<std::size_t>(i)] -
                     perm.phi[static_cast<std::size_t>(i)]) <= 1e-9);
    }

    // Symmetry on the 0<->1 symmetrized variant.
    std::vector<double> sym_values(game.table().size());
    for (std::size_t mask = 0; mask < sym_values.size(); ++mask) {
      sym_values[mask] =
          0.5 * (game.table()[mask] + game.table()[swap01(mask)]);
    }
    const TableGame sym_game(n, std::move(sym_values));
    const Attribution sym = exact_shapley(sym_game, n);
    CHECK(std::abs(sym.phi[0] - sym.phi[1]) <= 1e-9);

    // Null player appended as feature n.
    std::vector<double> null_values(std::size_t{1} << (n + 1));
    for (std::size_t mask = 0; mask < null_values.size(); ++mask) {
      null_values[mask] = game.table()[mask & ((std::size_t{1} << n) - 1)];
    }
    const TableGame null_game(n + 1, std::move(null_values));
    const Attribution with_null = exact_shapley(null_game, n + 1);
    CHECK(std::abs(with_null.phi[static_cast<std::size_t>(n)]) <= 1e-9);
  }
}

TEST_CASE("decoupled RealExp on an additive game") {
  // Dyadic contributions keep the pairwise interaction surplus exactly 0.
  const AdditiveGame game({0.5, 2.0, 0.25, 3.0});
  const SimilarityMatrix s(4);
  const Attribution a = realexp_decoupled(game, 4, s);
  REQUIRE(a.phi_independent.has_value());
  REQUIRE(a.phi_margin.has_value());
  const std::vector<double> expect{0.5, 2.0, 0.25, 3.0};
  for (int i = 0; i < 4; ++i) {
    CHECK(a.phi[static_cast<std::size_t>(i)] ==
          expect[static_cast<std::size_t>(i)]);
    CHECK((*a.phi_margin)[static_cast<std::size_t>(i)] == 0.0);
    CHECK_FALSE(a.margin_degenerate[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("decoupled RealExp zeroes the weight of a perfect duplicate") {
  // Features 0 and 1 duplicated, feature 2 independent.
  const DilutionGame game(1.0, 0.0, 3);
  SimilarityMatrix s(3);
  s.set(0, 1, 1.0);
  const Attribution a = realexp_decoupled(game, 3, s);

  // w_{0,1} = 0 and w_{0,2} = 1, so the margin is exactly the (0,2) surplus.
  const double v0 = game.value(Coalition::of(3, {0}));
  const double v2 = game.value(Coalition::of(3, {2}));
  const double v02 = game.value(Coalition::of(3, {0, 2}));
  const double ind0 = v0 - game.value(Coalition::empty(3));
  CHECK((*a.phi_independent)[0] == ind0);  // unreduced by the duplicate
  CHECK((*a.phi_margin)[0] == v02 - v2 - ind0);
  CHECK_FALSE(a.margin_degenerate[0]);
}

TEST_CASE("decoupled RealExp flags a fully-correlated feature") {
  const DilutionGame game(1.0, 0.5, 2);
  SimilarityMatrix s(2);
  s.set(0, 1, 1.0);
  const Attribution a = realexp_decoupled(game, 2, s);
  CHECK(a.margin_degenerate[0]);
  CHECK(a.margin_degenerate[1]);
  CHECK((*a.phi_margin)[0] == 0.0);
  CHECK(a.phi[0] == (*a.phi_independent)[0]);
}

TEST_CASE("decoupled weights: normalization and uniform reduction") {
  Rng rng(7);
  for (int round = 0; round < 20; ++round) {
    const int n = 2 + static_cast<int>(rng.uniform_index(5));
    // Random similarity, bounded away from the all-ones degenerate row.
    SimilarityMatrix s(n);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        s.set(i, j, rng.uniform_real(0.0, 0.95));
      }
    }
    for (int i = 0; i < n; ++i) {
      double denom = 0.0;
      for (int k = 0; k < n; ++k) {
        if (k != i) denom += 1.0 - s.at(i, k);
      }
      double wsum = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j != i) wsum += (1.0 - s.at(i, j)) / denom;
      }
      CHECK(std::abs(wsum - 1.0) <= 1e-12);
    }

    // Identity-like similarity reduces to uniform pairwise weights.
    const TableGame game = random_game(n, rng);
    const Attribution a = realexp_decoupled(game, n, SimilarityMatrix(n));
    const double v_empty = game.value(Coalition::empty(n));
    for (int i = 0; i < n; ++i) {
      const double ind = game.value(Coalition::of(n, {i})) - v_empty;
      double margin = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        margin += (game.value(Coalition::of(n, {i, j})) -
                   game.value(Coalition::of(n, {j})) - ind) /
                  static_cast<double>(n - 1);
      }
      CHECK(std::abs((*a.phi_margin)[static_cast<std::size_t>(i)] - margin) <=
            1e-12);
      // Decomposition is exact by construction.
      CHECK(a.phi[static_cast<std::size_t>(i)] ==
            (*a.phi_independent)[static_cast<std::size_t>(i)] +
                (*a.phi_margin)[static_cast<std::size_t>(i)]);
    }
  }
}

TEST_CASE("decoupled RealExp golden file on the weighted-majority design") {
  const TableGame game =
      load_game_fixture(kFixtures + "/weighted_majority.json");
  const std::vector<Mask> masks =
      generate_masks(3, 400, 0.3, Bernoulli{}, 20240601);
  std::vector<double> scores;
  for (const Mask& mask : masks) {
    Coalition kept(3);
    for (int j = 0; j < 3; ++j) {
      if (mask.mu[static_cast<std::size_t>(j)]) kept.insert(j);
    }
    scores.push_back(game.value(kept));
  }
  const PerturbationSet design = build_design(masks, scores, 0.25);
  const SimilarityMatrix s = estimate_similarity(design);
  const Attribution a = realexp_decoupled(game, 3, s);

  // Independent direct evaluation of the decoupled formulas.
  const double v_empty = game.value(Coalition::empty(3));
  for (int i = 0; i < 3; ++i) {
    const double ind = game.value(Coalition::of(3, {i})) - v_empty;
    double denom = 0.0;
    for (int k = 0; k < 3; ++k) {
      if (k != i) denom += 1.0 - s.at(i, k);
    }
    double margin = 0.0;
    for (int j = 0; j < 3; ++j) {
      if (j == i) continue;
      margin += (1.0 - s.at(i, j)) / denom *
                (game.value(Coalition::of(3, {i, j})) -
                 game.value(Coalition::of(3, {j})) - ind);
    }
    CHECK(std::abs(a.phi[static_cast<std::size_t>(i)] - (ind + margin)) <=
          1e-12);
  }

  const nlohmann::json golden =
      load_json_file(kFixtures + "/realexp_golden.json");
  const auto phi = golden.at("phi").get<std::vector<double>>();
  REQUIRE(phi.size() == a.phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    CHECK(std::abs(a.phi[i] - phi[i]) <= 1e-12);
  }
}

TEST_CASE("adjustment factor") {
  SimilarityMatrix s(4);
  s.set(0, 1, 1.0);
  s.set(0, 2, 0.5);
  s.set(0, 3, 0.2);

  CHECK(adjustment_factor(Coalition::empty(4), 0, s) == 1.0);
  CHECK(adjustment_factor(Coalition::of(4, {1}), 0, s) == 0.0);
  CHECK(std::abs(adjustment_factor(Coalition::of(4, {2, 3}), 0, s) - 0.4) <=
        1e-12);
  CHECK_THROWS_AS(adjustment_factor(Coalition::of(4, {0, 1}), 0, s),
                  ValidationError);
}

TEST_CASE("permutation RealExp reduces to permutation Shapley at zero similarity") {
  Rng rng(17);
  for (int round = 0; round < 30; ++round) {
    const int n = 2 + static_cast<int>(rng.uniform_index(5));  // 2..6
    const TableGame game = random_game(n, rng);
    const Attribution adjusted =
        realexp_permutation(game, n, SimilarityMatrix(n), Exhaustive{});
    const Attribution plain = permutation_shapley(game, n, Exhaustive{});
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(adjusted.phi[static_cast<std::size_t>(i)] -
                     plain.phi[static_cast<std::size_t>(i)]) <= 1e-9);
    }
  }
}

TEST_CASE("permutation RealExp zeroes terms behind a perfect duplicate") {
  // Proof-2 game with the duplicate pair marked in the similarity matrix:
  // the epsilon half of the average is removed, leaving delta/2.
  const double delta = 1.0, epsilon = 0.4;
  const DilutionGame game(delta, epsilon, 3);
  SimilarityMatrix s(3);
  s.set(0, 1, 1.0);
  const Attribution a = realexp_permutation(game, 3, s, Exhaustive{});
  CHECK(std::abs(a.phi[0] - delta / 2.0) <= 1e-12);
  CHECK(std::abs(a.phi[1] - delta / 2.0) <= 1e-12);
}

TEST_CASE("permutation RealExp with a single feature") {
  const LambdaGame game(
      1, [](const Coalition& c) { return c.count() == 1 ? 2.5 : 1.0; });
  const Attribution a =
      realexp_permutation(game, 1, SimilarityMatrix(1), Exhaustive{});
  CHECK(a.phi[0] == 1.5);
}

TEST_CASE("similarity estimation") {
  SUBCASE("identical mask columns are perfectly similar") {
    std::vector<Mask> masks;
    Rng rng(5);
    for (int k = 0; k < 50; ++k) {
      const std::uint8_t a = rng.bernoulli(0.5) ? 1 : 0;
      const std::uint8_t b = rng.bernoulli(0.5) ? 1 : 0;
      masks.push_back(Mask{{a, a, b}});
    }
    const PerturbationSet design(masks, std::nullopt, 0.25, 0);
    const SimilarityMatrix s = estimate_similarity(design);
    CHECK(std::abs(s.at(0, 1) - 1.0) <= 1e-9);
    CHECK(s.at(0, 0) == 1.0);
  }

  SUBCASE("independent columns stay near zero") {
    const std::vector<Mask> masks =
        generate_masks(4, 10000, 0.3, Bernoulli{}, 11);
    const PerturbationSet design(masks, std::nullopt, 0.25, 11);
    const SimilarityMatrix s = estimate_similarity(design);
    for (int i = 0; i < 4; ++i) {
      for (int j = i + 1; j < 4; ++j) {
        CHECK(s.at(i, j) <= 0.05);
      }
    }
  }

  SUBCASE("constant columns get zero off-diagonal") {
    std::vector<Mask> masks;
    Rng rng(6);
    for (int k = 0; k < 40; ++k) {
      masks.push_back(Mask{
          {1, rng.bernoulli(0.5) ? std::uint8_t{1} : std::uint8_t{0}}});
    }
    const PerturbationSet design(masks, std::nullopt, 0.25, 0);
    const SimilarityMatrix s = estimate_similarity(design);
    CHECK(s.at(0, 1) == 0.0);
    CHECK(s.at(0, 0) == 1.0);
  }

  SUBCASE("insufficient data is rejected") {
    const PerturbationSet design({Mask{{1, 0}}}, std::nullopt, 0.25, 0);
    CHECK_THROWS_AS(estimate_similarity(design), ValidationError);
  }
}

TEST_CASE("similarity matrix validation") {
  CHECK_THROWS_AS(SimilarityMatrix::from_rows({{1.0, 0.5}, {0.4, 1.0}}),
                  ValidationError);
  CHECK_THROWS_AS(SimilarityMatrix::from_rows({{1.0, 1.5}, {1.5, 1.0}}),
                  ValidationError);
  CHECK_THROWS_AS(SimilarityMatrix::from_rows({{0.9, 0.0}, {0.0, 1.0}}),
                  ValidationError);
  const SimilarityMatrix ok =
      SimilarityMatrix::from_rows({{1.0, 0.25}, {0.25, 1.0}});
  CHECK(ok.at(1, 0) == 0.25);
}

TEST_CASE("game fixture format") {
  const TableGame game =
      load_game_fixture(kFixtures + "/weighted_majority.json");
  CHECK(game.arity() == 3);
  CHECK(game.value(Coalition::of(3, {0, 1})) == 1.0);

  // Round-trip keeps every coalition value.
  const TableGame back = game_from_json(game_to_json(game));
  CHECK(back.table() == game.table());

  nlohmann::json missing = game_to_json(game);
  missing["values"].erase("3");
  CHECK_THROWS_AS(game_from_json(missing), ValidationError);
}

TEST_CASE("attribution JSON shape") {
  const TableGame game(2, {0.0, 1.0, 1.0, 2.0});
  const Attribution a = realexp_decoupled(game, 2, SimilarityMatrix(2));
  const nlohmann::json doc = attribution_to_json(a);
  CHECK(doc.at("method") == "realexp_decoupled");
  CHECK(doc.at("phi").size() == 2);
  CHECK(doc.at("phi_independent").is_array());
  CHECK(doc.at("phi_margin").is_array());
  CHECK(doc.at("labels").is_null());

  const nlohmann::json exact = attribution_to_json(exact_shapley(game, 2));
  CHECK(exact.at("phi_independent").is_null());
}
