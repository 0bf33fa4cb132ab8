#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "realexp/evaluation.hpp"
#include "realexp/json_io.hpp"
#include "realexp/rng.hpp"

using namespace realexp;

TEST_CASE("image worked example: 4 of 5 matched, tau = 1/3") {
  // Experts rank S1 > S3 > S5 > S7 > S9; the model's top five are
  // (S3, S1, S7, S5, S2).
  const ExpertAnnotation expert({1, 3, 5, 7, 9});
  const ModelRanking model({3, 1, 7, 5, 2});

  const auto [matched, accuracy] = h_score(expert, model);
  CHECK(matched == 4);
  CHECK(accuracy == 0.8);

  const ConsistencyReport report = kendall_tau(expert, model);
  CHECK(report.match_count == 4);
  CHECK(report.accuracy == 0.8);
  CHECK(report.concordant == 4);
  CHECK(report.discordant == 2);
  CHECK(report.tau_defined);
  CHECK(std::abs(report.tau - 1.0 / 3.0) <= 1e-12);
}

TEST_CASE("text worked example: full match in order, tau = 1") {
  // Experts pick (T4, T10); the model's top two match in the same order.
  const ExpertAnnotation expert({4, 10});
  const ModelRanking model({4, 10});
  const ConsistencyReport report = kendall_tau(expert, model);
  CHECK(report.match_count == 2);
  CHECK(report.accuracy == 1.0);
  CHECK(report.tau == 1.0);
}

TEST_CASE("h-score corner cases") {
  SUBCASE("identical lists") {
    const auto [matched, accuracy] =
        h_score(ExpertAnnotation({0, 1, 2}), ModelRanking({0, 1, 2}));
    CHECK(matched == 3);
    CHECK(accuracy == 1.0);
  }
  SUBCASE("disjoint lists") {
    const auto [matched, accuracy] =
        h_score(ExpertAnnotation({0, 1}), ModelRanking({2, 3}));
    CHECK(matched == 0);
    CHECK(accuracy == 0.0);
  }
  SUBCASE("accuracy ignores the model's internal order") {
    const ExpertAnnotation expert({0, 1, 2, 3});
    const auto a = h_score(expert, ModelRanking({3, 2, 1, 0}));
    const auto b = h_score(expert, ModelRanking({0, 1, 2, 3}));
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS(ExpertAnnotation({1, 1}), ValidationError);
    CHECK_THROWS_AS(ModelRanking({}), ValidationError);
    CHECK_THROWS_AS(
        h_score(ExpertAnnotation({0, 1}), ModelRanking({0, 1, 2})),
        ValidationError);
  }
}

TEST_CASE("kendall tau properties") {
  SUBCASE("expert-ordered model scores 1") {
    const ConsistencyReport report = kendall_tau(
        ExpertAnnotation({5, 2, 8, 0}), ModelRanking({5, 2, 8, 0}));
    CHECK(report.tau == 1.0);
  }

  SUBCASE("reversing a fully matched model negates to -1") {
    const ConsistencyReport report = kendall_tau(
        ExpertAnnotation({5, 2, 8, 0}), ModelRanking({0, 8, 2, 5}));
    CHECK(report.tau == -1.0);
    CHECK(report.concordant == 0);
    CHECK(report.discordant == 6);
  }

  SUBCASE("reversal negates tau for any matched subset") {
    Rng rng(23);
    for (int round = 0; round < 50; ++round) {
      const int n = 12;
      const int m = 3 + static_cast<int>(rng.uniform_index(4));
      std::vector<int> pool(static_cast<std::size_t>(n));
      std::iota(pool.begin(), pool.end(), 0);
      rng.shuffle(pool);
      const std::vector<int> expert_items(pool.begin(), pool.begin() + m);
      rng.shuffle(pool);
      std::vector<int> model_items(pool.begin(), pool.begin() + m);

      const ExpertAnnotation expert(expert_items);
      const ConsistencyReport forward =
          kendall_tau(expert, ModelRanking(model_items));
      std::reverse(model_items.begin(), model_items.end());
      const ConsistencyReport backward =
          kendall_tau(expert, ModelRanking(model_items));
      if (forward.tau_defined) {
        CHECK(forward.tau == -backward.tau);
        CHECK(forward.tau >= -1.0);
        CHECK(forward.tau <= 1.0);
        CHECK(forward.concordant == backward.discordant);
      } else {
        CHECK(forward.tau == 0.0);
      }
    }
  }

  SUBCASE("tau depends on the model's order, accuracy does not") {
    const ExpertAnnotation expert({0, 1, 2});
    const ConsistencyReport a = kendall_tau(expert, ModelRanking({0, 1, 2}));
    const ConsistencyReport b = kendall_tau(expert, ModelRanking({2, 1, 0}));
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.tau != b.tau);
  }

  SUBCASE("a single match leaves tau undefined, reported as 0") {
    const ConsistencyReport report =
        kendall_tau(ExpertAnnotation({0, 1}), ModelRanking({1, 5}));
    CHECK(report.match_count == 1);
    CHECK_FALSE(report.tau_defined);
    CHECK(report.tau == 0.0);
  }
}

TEST_CASE("jaccard stability") {
  SUBCASE("identical runs") {
    CHECK(jaccard_stability({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}}) == 1.0);
  }
  SUBCASE("disjoint runs") {
    CHECK(jaccard_stability({{1, 2}, {3, 4}}) == 0.0);
  }
  SUBCASE("worked overlap") {
    CHECK(jaccard_stability({{1, 2, 3}, {2, 3, 4}}) == 0.5);
  }
  SUBCASE("mean over unordered pairs, symmetric") {
    const double forward = jaccard_stability({{1, 2}, {2, 3}, {1, 3}});
    const double backward = jaccard_stability({{1, 3}, {2, 3}, {1, 2}});
    CHECK(forward == backward);
    CHECK(std::abs(forward - 1.0 / 3.0) <= 1e-12);
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS(jaccard_stability({{1, 2}}), ValidationError);
    CHECK_THROWS_AS(jaccard_stability({{1, 2}, {}}), ValidationError);
    CHECK_THROWS_AS(jaccard_stability({{1, 2}, {1, 2, 3}}), ValidationError);
  }
}

TEST_CASE("r squared") {
  SUBCASE("perfect prediction") {
    CHECK(r_squared({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}).value == 1.0);
  }
  SUBCASE("predicting the mean scores zero") {
    CHECK(r_squared({1.0, 2.0, 3.0}, {2.0, 2.0, 2.0}).value == 0.0);
  }
  SUBCASE("worked example: 1 - 1/2") {
    CHECK(r_squared({1.0, 2.0, 3.0}, {1.0, 2.0, 4.0}).value == 0.5);
  }
  SUBCASE("shift invariance") {
    Rng rng(41);
    std::vector<double> actual, predicted, actual_shift, predicted_shift;
    for (int i = 0; i < 50; ++i) {
      actual.push_back(rng.uniform_real(-1, 1));
      predicted.push_back(actual.back() + rng.uniform_real(-0.1, 0.1));
      actual_shift.push_back(actual.back() + 7.5);
      predicted_shift.push_back(predicted.back() + 7.5);
    }
    const double base = r_squared(actual, predicted).value;
    const double shifted = r_squared(actual_shift, predicted_shift).value;
    CHECK(std::abs(base - shifted) <= 1e-9);
  }
  SUBCASE("zero-variance actuals flag the degenerate convention") {
    const R2Result result = r_squared({2.0, 2.0}, {1.0, 3.0});
    CHECK(result.value == 0.0);
    CHECK(result.degenerate);
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS(r_squared({1.0}, {1.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(r_squared({}, {}), ValidationError);
  }
}

TEST_CASE("annotation files and report JSON") {
  const ExpertAnnotation expert = annotation_from_json(
      nlohmann::json{{"items", {4, 10}}, {"labels", nullptr}});
  CHECK(expert.items == std::vector<int>{4, 10});
  CHECK_THROWS_AS(annotation_from_json(nlohmann::json{{"top", {1}}}),
                  ValidationError);

  const ConsistencyReport report =
      kendall_tau(ExpertAnnotation({1, 3, 5, 7, 9}),
                  ModelRanking({3, 1, 7, 5, 2}));
  const nlohmann::json doc = consistency_to_json(
      report, items_hash({1, 3, 5, 7, 9}), items_hash({3, 1, 7, 5, 2}));
  CHECK(doc.at("match_count") == 4);
  CHECK(doc.at("accuracy") == 0.8);
  CHECK(doc.at("concordant") == 4);
  CHECK(doc.at("discordant") == 2);
  CHECK(doc.at("tau_defined") == true);
  CHECK(doc.at("expert_hash").is_string());

  // The hash separates distinct item lists and is stable.
  CHECK(items_hash({1, 2, 3}) == items_hash({1, 2, 3}));
  CHECK(items_hash({1, 2, 3}) != items_hash({3, 2, 1}));
}
