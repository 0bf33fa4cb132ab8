#include "realexp/coalition.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace realexp {

FeatureSet::FeatureSet(int count, std::optional<std::vector<std::string>> names)
    : n(count), labels(std::move(names)) {
  if (n < 1) throw ValidationError("feature set needs n >= 1");
  if (labels) {
    if (static_cast<int>(labels->size()) != n) {
      throw ValidationError("label count does not match feature count");
    }
    std::set<std::string> seen(labels->begin(), labels->end());
    if (static_cast<int>(seen.size()) != n) {
      throw ValidationError("feature labels must be distinct");
    }
  }
}

Coalition::Coalition(int n) : n_(n), count_(0) {
  if (n < 1) throw ValidationError("coalition arity must be >= 1");
  words_.assign((static_cast<std::size_t>(n) + 63) / 64, 0);
}

Coalition Coalition::full(int n) {
  Coalition c(n);
  for (int i = 0; i < n; ++i) c.insert(i);
  return c;
}

Coalition Coalition::from_mask(int n, std::uint64_t mask) {
  if (n > 64) throw ValidationError("mask form requires n <= 64");
  Coalition c(n);
  for (int i = 0; i < n; ++i) {
    if ((mask >> i) & 1u) c.insert(i);
  }
  if (n < 64 && (mask >> n) != 0) {
    throw ValidationError("mask has bits outside {0..n-1}");
  }
  return c;
}

Coalition Coalition::of(int n, std::initializer_list<int> members) {
  Coalition c(n);
  for (int i : members) c.insert(i);
  return c;
}

void Coalition::check_index(int i) const {
  if (i < 0 || i >= n_) {
    throw ValidationError("feature index " + std::to_string(i) +
                          " outside {0.." + std::to_string(n_ - 1) + "}");
  }
}

void Coalition::insert(int i) {
  check_index(i);
  std::uint64_t& word = words_[static_cast<std::size_t>(i) >> 6];
  const std::uint64_t bit = std::uint64_t{1} << (i & 63);
  if (!(word & bit)) {
    word |= bit;
    ++count_;
  }
}

void Coalition::erase(int i) {
  check_index(i);
  std::uint64_t& word = words_[static_cast<std::size_t>(i) >> 6];
  const std::uint64_t bit = std::uint64_t{1} << (i & 63);
  if (word & bit) {
    word &= ~bit;
    --count_;
  }
}

Coalition Coalition::with(int i) const {
  Coalition c(*this);
  c.insert(i);
  return c;
}

Coalition Coalition::without(int i) const {
  Coalition c(*this);
  c.erase(i);
  return c;
}

std::uint64_t Coalition::mask64() const {
  if (n_ > 64) throw ValidationError("mask form requires n <= 64");
  return words_[0];
}

std::vector<int> Coalition::members() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(count_));
  for (int i = 0; i < n_; ++i) {
    if (contains(i)) out.push_back(i);
  }
  return out;
}

std::string Coalition::to_string() const {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (int i : members()) {
    if (!first) os << ',';
    os << i;
    first = false;
  }
  os << '}';
  return os.str();
}

TableGame::TableGame(int n, std::vector<double> values)
    : n_(n), values_(std::move(values)) {
  if (n < 1) throw ValidationError("table game needs n >= 1");
  if (n > kMaxFeatures) {
    throw CapacityError("table game capped at n <= " +
                        std::to_string(kMaxFeatures));
  }
  const std::size_t expect = std::size_t{1} << n;
  if (values_.size() != expect) {
    throw ValidationError("table game needs all 2^n values (" +
                          std::to_string(expect) + "), got " +
                          std::to_string(values_.size()));
  }
}

double TableGame::value(const Coalition& coalition) const {
  if (coalition.arity() != n_) {
    throw ValidationError("coalition arity does not match game");
  }
  return values_[coalition.mask64()];
}

AdditiveGame::AdditiveGame(std::vector<double> contributions)
    : contrib_(std::move(contributions)) {
  if (contrib_.empty()) throw ValidationError("additive game needs n >= 1");
}

double AdditiveGame::value(const Coalition& coalition) const {
  double total = 0.0;
  for (int i = 0; i < arity(); ++i) {
    if (coalition.contains(i)) total += contrib_[static_cast<std::size_t>(i)];
  }
  return total;
}

DilutionGame::DilutionGame(double delta, double epsilon, int n)
    : delta_(delta), epsilon_(epsilon), n_(n) {
  if (n < 2) throw ValidationError("dilution game needs n >= 2");
}

double DilutionGame::value(const Coalition& coalition) const {
  const bool a = coalition.contains(0);
  const bool b = coalition.contains(1);
  if (a && b) return delta_ + epsilon_;
  if (a || b) return delta_;
  return 0.0;
}

SimilarityMatrix::SimilarityMatrix(int n) : n_(n) {
  if (n < 1) throw ValidationError("similarity matrix needs n >= 1");
  data_.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) data_[index(i, i)] = 1.0;
}

SimilarityMatrix SimilarityMatrix::from_rows(
    const std::vector<std::vector<double>>& rows) {
  const int n = static_cast<int>(rows.size());
  SimilarityMatrix s(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n) {
      throw ValidationError("similarity matrix must be square");
    }
    for (int j = 0; j < n; ++j) {
      s.data_[s.index(i, j)] = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  s.validate();
  return s;
}

std::size_t SimilarityMatrix::index(int i, int j) const {
  if (i < 0 || i >= n_ || j < 0 || j >= n_) {
    throw ValidationError("similarity index out of range");
  }
  return static_cast<std::size_t>(i) * n_ + j;
}

void SimilarityMatrix::set(int i, int j, double value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ValidationError("similarity entries must lie in [0,1]");
  }
  data_[index(i, j)] = value;
  data_[index(j, i)] = value;
}

void SimilarityMatrix::validate() const {
  for (int i = 0; i < n_; ++i) {
    if (data_[static_cast<std::size_t>(i) * n_ + i] != 1.0) {
      throw ValidationError("similarity diagonal must be 1");
    }
    for (int j = 0; j < n_; ++j) {
      const double v = data_[static_cast<std::size_t>(i) * n_ + j];
      if (!(v >= 0.0 && v <= 1.0) || !std::isfinite(v)) {
        throw ValidationError("similarity entries must lie in [0,1]");
      }
      if (v != data_[static_cast<std::size_t>(j) * n_ + i]) {
        throw ValidationError("similarity matrix must be symmetric");
      }
    }
  }
}

std::string method_name(AttributionMethod method) {
  switch (method) {
    case AttributionMethod::ExactShapley: return "exact_shapley";
    case AttributionMethod::PermSampledShapley: return "perm_sampled_shapley";
    case AttributionMethod::RealExpDecoupled: return "realexp_decoupled";
    case AttributionMethod::RealExpPermutation: return "realexp_permutation";
    case AttributionMethod::TreeGain: return "tree_gain";
  }
  throw ValidationError("unknown attribution method");
}

AttributionMethod method_from_name(const std::string& name) {
  if (name == "exact_shapley") return AttributionMethod::ExactShapley;
  if (name == "perm_sampled_shapley") return AttributionMethod::PermSampledShapley;
  if (name == "realexp_decoupled") return AttributionMethod::RealExpDecoupled;
  if (name == "realexp_permutation") return AttributionMethod::RealExpPermutation;
  if (name == "tree_gain") return AttributionMethod::TreeGain;
  throw ValidationError("unknown attribution method: " + name);
}

void Attribution::validate() const {
  if (phi.empty()) throw ValidationError("attribution has no entries");
  for (double v : phi) {
    if (!std::isfinite(v)) throw ValidationError("attribution must be finite");
  }
  const bool decoupled = method == AttributionMethod::RealExpDecoupled;
  if (decoupled != (phi_independent.has_value() && phi_margin.has_value())) {
    throw ValidationError(
        "components present iff method is realexp_decoupled");
  }
  if (decoupled) {
    if (phi_independent->size() != phi.size() ||
        phi_margin->size() != phi.size()) {
      throw ValidationError("component lengths must match phi");
    }
    for (std::size_t i = 0; i < phi.size(); ++i) {
      if (phi[i] != (*phi_independent)[i] + (*phi_margin)[i]) {
        throw ValidationError("phi must equal independent + margin exactly");
      }
    }
  }
  if (labels && labels->size() != phi.size()) {
    throw ValidationError("label count must match phi");
  }
}

std::vector<int> ranking_of(const std::vector<double>& phi) {
  std::vector<int> order(phi.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return phi[static_cast<std::size_t>(a)] > phi[static_cast<std::size_t>(b)];
  });
  return order;
}

}  // namespace realexp
