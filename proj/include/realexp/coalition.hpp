#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "realexp/errors.hpp"

namespace realexp {

// The feature set F the game is played over: a count plus optional display
// labels (distinct, one per feature).
struct FeatureSet {
  int n = 0;
  std::optional<std::vector<std::string>> labels;

  explicit FeatureSet(int count,
                      std::optional<std::vector<std::string>> names = {});
};

// A subset of {0..n-1}, stored as a bitset over 64-bit words. Set semantics:
// no duplicates, order-free. The empty set and the full set are both valid.
class Coalition {
 public:
  explicit Coalition(int n);

  static Coalition empty(int n) { return Coalition(n); }
  static Coalition full(int n);
  // Low n bits of `mask` select members; requires n <= 64.
  static Coalition from_mask(int n, std::uint64_t mask);
  static Coalition of(int n, std::initializer_list<int> members);

  int arity() const { return n_; }
  int count() const { return count_; }
  bool empty_set() const { return count_ == 0; }

  bool contains(int i) const {
    check_index(i);
    return (words_[static_cast<std::size_t>(i) >> 6] >> (i & 63)) & 1u;
  }
  void insert(int i);
  void erase(int i);

  Coalition with(int i) const;
  Coalition without(int i) const;

  // Bitmask form (bit i = feature i); requires n <= 64. This is the key used
  // by the synthetic-game fixture format.
  std::uint64_t mask64() const;

  std::vector<int> members() const;
  std::string to_string() const;  // "{0,2,5}"

  bool operator==(const Coalition& other) const {
    return n_ == other.n_ && words_ == other.words_;
  }

 private:
  void check_index(int i) const;

  int n_;
  int count_;
  std::vector<std::uint64_t> words_;
};

// Abstract payoff map v: Coalition -> real. Implementations must be
// deterministic and defined for all 2^n coalitions; const calls must be safe
// to issue concurrently.
class ValueFunction {
 public:
  virtual ~ValueFunction() = default;
  virtual int arity() const = 0;
  virtual double value(const Coalition& coalition) const = 0;
};

// Game given as an explicit table over all 2^n coalitions (the fixture
// format: bitmask index -> payoff). Capped at n <= 20.
class TableGame : public ValueFunction {
 public:
  TableGame(int n, std::vector<double> values);

  int arity() const override { return n_; }
  double value(const Coalition& coalition) const override;
  double value_at(std::uint64_t mask) const { return values_[mask]; }
  const std::vector<double>& table() const { return values_; }

  static constexpr int kMaxFeatures = 20;

 private:
  int n_;
  std::vector<double> values_;
};

// v(S) = sum of per-feature contributions of members. Interaction-free by
// construction, used as the additive reference game.
class AdditiveGame : public ValueFunction {
 public:
  explicit AdditiveGame(std::vector<double> contributions);

  int arity() const override { return static_cast<int>(contrib_.size()); }
  double value(const Coalition& coalition) const override;

 private:
  std::vector<double> contrib_;
};

// Test-only convenience: wraps a callable.
class LambdaGame : public ValueFunction {
 public:
  LambdaGame(int n, std::function<double(const Coalition&)> fn)
      : n_(n), fn_(std::move(fn)) {}

  int arity() const override { return n_; }
  double value(const Coalition& coalition) const override {
    return fn_(coalition);
  }

 private:
  int n_;
  std::function<double(const Coalition&)> fn_;
};

// Two-regime duplicate-feature game: features 0 and 1 are duplicates. The
// marginal contribution of either is `delta` while the other is absent and
// `epsilon` once it is present; all remaining features are null players.
class DilutionGame : public ValueFunction {
 public:
  DilutionGame(double delta, double epsilon, int n);

  int arity() const override { return n_; }
  double value(const Coalition& coalition) const override;

  double delta() const { return delta_; }
  double epsilon() const { return epsilon_; }

 private:
  double delta_;
  double epsilon_;
  int n_;
};

// Symmetric n x n matrix of pairwise feature similarities in [0, 1] with a
// unit diagonal.
class SimilarityMatrix {
 public:
  explicit SimilarityMatrix(int n);  // identity-like: zero off-diagonal

  static SimilarityMatrix identity_like(int n) { return SimilarityMatrix(n); }
  static SimilarityMatrix from_rows(const std::vector<std::vector<double>>& rows);

  int size() const { return n_; }
  double at(int i, int j) const { return data_[index(i, j)]; }
  // Writes both (i,j) and (j,i); value must lie in [0,1].
  void set(int i, int j, double value);

  void validate() const;

 private:
  std::size_t index(int i, int j) const;

  int n_;
  std::vector<double> data_;
};

enum class AttributionMethod {
  ExactShapley,
  PermSampledShapley,
  RealExpDecoupled,
  RealExpPermutation,
  TreeGain,
};

std::string method_name(AttributionMethod method);
AttributionMethod method_from_name(const std::string& name);

// Per-feature attribution vector. For RealExpDecoupled the two components
// are populated and phi[i] is exactly their sum; `margin_degenerate` marks
// features whose interaction weight denominator collapsed to zero.
struct Attribution {
  AttributionMethod method = AttributionMethod::ExactShapley;
  std::vector<double> phi;
  std::optional<std::vector<double>> phi_independent;
  std::optional<std::vector<double>> phi_margin;
  std::optional<std::vector<std::string>> labels;
  std::vector<bool> margin_degenerate;

  int arity() const { return static_cast<int>(phi.size()); }
  void validate() const;
};

// Stable argsort of phi, descending; ties broken by lower index.
std::vector<int> ranking_of(const std::vector<double>& phi);

}  // namespace realexp
