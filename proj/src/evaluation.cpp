#include "realexp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>

namespace realexp {

namespace {

void check_items(const std::vector<int>& items, const char* who) {
  if (items.empty()) {
    throw ValidationError(std::string(who) + " list must be non-empty");
  }
  std::set<int> seen(items.begin(), items.end());
  if (seen.size() != items.size()) {
    throw ValidationError(std::string(who) + " list has duplicate indices");
  }
}

}  // namespace

ExpertAnnotation::ExpertAnnotation(std::vector<int> ordered_items)
    : items(std::move(ordered_items)) {
  check_items(items, "expert");
}

ModelRanking::ModelRanking(std::vector<int> ordered_items)
    : items(std::move(ordered_items)) {
  check_items(items, "model ranking");
}

std::pair<int, double> h_score(const ExpertAnnotation& expert,
                               const ModelRanking& model) {
  if (expert.size() != model.size()) {
    throw ValidationError("expert and model lists must share m");
  }
  const std::set<int> model_set(model.items.begin(), model.items.end());
  int matched = 0;
  for (int item : expert.items) matched += model_set.count(item) ? 1 : 0;
  return {matched, static_cast<double>(matched) /
                       static_cast<double>(expert.size())};
}

ConsistencyReport kendall_tau(const ExpertAnnotation& expert,
                              const ModelRanking& model) {
  ConsistencyReport report;
  const auto [matched, accuracy] = h_score(expert, model);
  report.match_count = matched;
  report.accuracy = accuracy;

  std::map<int, int> model_rank;
  for (int r = 0; r < model.size(); ++r) {
    model_rank[model.items[static_cast<std::size_t>(r)]] = r;
  }
  // Matched items in expert order.
  std::vector<int> matched_items;
  for (int item : expert.items) {
    if (model_rank.count(item)) matched_items.push_back(item);
  }

  if (matched_items.size() < 2) {
    report.tau_defined = false;
    report.tau = 0.0;
    return report;
  }
  int concordant = 0, discordant = 0;
  for (std::size_t i = 0; i + 1 < matched_items.size(); ++i) {
    for (std::size_t j = i + 1; j < matched_items.size(); ++j) {
      if (model_rank[matched_items[i]] < model_rank[matched_items[j]]) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  report.concordant = concordant;
  report.discordant = discordant;
  const double h = static_cast<double>(matched_items.size());
  report.tau = 2.0 * (concordant - discordant) / (h * (h - 1.0));
  report.tau_defined = true;
  return report;
}

double jaccard_stability(const std::vector<std::set<int>>& runs) {
  if (runs.size() < 2) {
    throw ValidationError("stability needs at least 2 runs");
  }
  const std::size_t k = runs.front().size();
  for (const auto& run : runs) {
    if (run.empty()) throw ValidationError("stability runs must be non-empty");
    if (run.size() != k) {
      throw ValidationError("stability runs must share the same k");
    }
  }
  double total = 0.0;
  int pairs = 0;
  for (std::size_t a = 0; a + 1 < runs.size(); ++a) {
    for (std::size_t b = a + 1; b < runs.size(); ++b) {
      std::vector<int> inter;
      std::set_intersection(runs[a].begin(), runs[a].end(), runs[b].begin(),
                            runs[b].end(), std::back_inserter(inter));
      const double union_size =
          static_cast<double>(runs[a].size() + runs[b].size() - inter.size());
      total += static_cast<double>(inter.size()) / union_size;
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

R2Result r_squared(const std::vector<double>& actual,
                   const std::vector<double>& predicted) {
  if (actual.empty() || actual.size() != predicted.size()) {
    throw ValidationError("r_squared needs equal non-empty vectors");
  }
  double mean = 0.0;
  for (double y : actual) mean += y;
  mean /= static_cast<double>(actual.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
  }
  if (ss_tot == 0.0) return {0.0, true};
  return {1.0 - ss_res / ss_tot, false};
}

std::string items_hash(const std::vector<int>& items) {
  std::uint64_t hash = 1469598103934665603ULL;
  auto mix = [&hash](std::uint64_t value) {
    for (int byte = 0; byte < 8; ++byte) {
      hash ^= (value >> (8 * byte)) & 0xff;
      hash *= 1099511628211ULL;
    }
  };
  mix(items.size());
  for (int item : items) mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(item)));
  std::ostringstream os;
  os << std::hex << hash;
  return os.str();
}

}  // namespace realexp
