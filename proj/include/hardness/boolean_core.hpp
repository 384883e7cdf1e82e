#pragma once

// Boolean functions, distributions and weighted inner products over {-1,+1}^n.
//
// Index convention: a point x in {-1,+1}^n is stored as the n-bit integer whose bit i is set
// exactly when x_i = -1. Truth tables and probability tables are dense arrays of length 2^n in
// that index order. Logical values follow TRUE <-> +1, FALSE <-> -1.

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "hardness/errors.hpp"

namespace hardness {

inline constexpr int kMaxDimension = 24;
inline constexpr double kProbabilityTolerance = 1e-12;

/// Real-valued table (a probe phi, a hypothesis, a gradient coordinate) in index order.
using RealTable = std::vector<double>;

inline void check_dimension(int n) {
  if (n < 1)
    throw DimensionError("dimension must be at least 1, got " + std::to_string(n));
  if (n > kMaxDimension)
    throw DomainTooLarge("dimension " + std::to_string(n) + " exceeds the dense-table cap of " +
                         std::to_string(kMaxDimension));
}

inline std::size_t cube_size(int n) {
  check_dimension(n);
  return std::size_t{1} << n;
}

struct Point {
  int n = 0;
  std::uint32_t bits = 0;

  /// Coordinate value x_i in {-1,+1}, 0-based.
  int operator[](int i) const { return ((bits >> i) & 1u) ? -1 : 1; }
  std::uint32_t index() const { return bits; }

  static Point from_signs(std::span<const int> signs) {
    Point p{static_cast<int>(signs.size()), 0};
    for (std::size_t i = 0; i < signs.size(); ++i) {
      if (signs[i] != 1 && signs[i] != -1)
        throw DimensionError("point coordinates must be +1 or -1");
      if (signs[i] == -1)
        p.bits |= 1u << i;
    }
    return p;
  }

  friend bool operator==(const Point&, const Point&) = default;
};

class BooleanFunction {
public:
  BooleanFunction() = default;

  BooleanFunction(int n, std::vector<std::int8_t> table) : n_(n), table_(std::move(table)) {
    if (table_.size() != cube_size(n))
      throw DimensionError("truth table length " + std::to_string(table_.size()) +
                           " does not match 2^" + std::to_string(n));
    for (auto v : table_)
      if (v != 1 && v != -1)
        throw DimensionError("truth table entries must be +1 or -1");
  }

  template <class Fn>
  static BooleanFunction from_fn(int n, Fn&& fn) {
    std::vector<std::int8_t> t(cube_size(n));
    for (std::uint32_t i = 0; i < t.size(); ++i)
      t[i] = static_cast<std::int8_t>(fn(Point{n, i}));
    return BooleanFunction(n, std::move(t));
  }

  static BooleanFunction constant(int n, int value) {
    return from_fn(n, [value](Point) { return value; });
  }

  int dimension() const { return n_; }
  std::size_t size() const { return table_.size(); }
  int at(std::size_t index) const { return table_[index]; }
  int operator()(Point x) const { return table_[x.bits]; }
  std::span<const std::int8_t> table() const { return table_; }

  RealTable to_real() const { return RealTable(table_.begin(), table_.end()); }

  friend bool operator==(const BooleanFunction&, const BooleanFunction&) = default;

private:
  int n_ = 0;
  std::vector<std::int8_t> table_;
};

/// Parity f_I(x) = prod_{i in I} x_i, with I given as a bit mask over 0-based coordinates.
struct ParityDescriptor {
  int n = 0;
  std::uint32_t subset = 0;

  static ParityDescriptor from_subset(int n, std::span<const int> coords) {
    check_dimension(n);
    ParityDescriptor p{n, 0};
    for (int c : coords) {
      if (c < 0 || c >= n)
        throw DimensionError("parity coordinate " + std::to_string(c) + " outside [0, n)");
      p.subset |= 1u << c;
    }
    return p;
  }
};

inline int parity_value(std::uint32_t subset, std::uint32_t point_bits) {
  return (std::popcount(subset & point_bits) & 1) ? -1 : 1;
}

inline BooleanFunction materialize_parity(const ParityDescriptor& p) {
  check_dimension(p.n);
  if (p.n < 32 && (p.subset >> p.n) != 0)
    throw DimensionError("parity subset references coordinates beyond n");
  return BooleanFunction::from_fn(p.n, [&](Point x) { return parity_value(p.subset, x.bits); });
}

class Distribution {
public:
  Distribution() = default;

  /// Rejects tables that are negative anywhere or do not sum to 1 within 1e-12.
  Distribution(int n, std::vector<double> probs) : n_(n), probs_(std::move(probs)) {
    if (probs_.size() != cube_size(n))
      throw DimensionError("distribution length " + std::to_string(probs_.size()) +
                           " does not match 2^" + std::to_string(n));
    double total = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0) || !std::isfinite(p))
        throw ParamError("distribution entries must be finite and non-negative");
      total += p;
    }
    if (std::abs(total - 1.0) > kProbabilityTolerance)
      throw ParamError("distribution sums to " + std::to_string(total) + ", not 1");
  }

  static Distribution uniform(int n) {
    const std::size_t size = cube_size(n);
    return Distribution(n, std::vector<double>(size, 1.0 / static_cast<double>(size)));
  }

  /// Explicit renormalization of non-negative weights.
  static Distribution normalized(int n, std::vector<double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w))
        throw ParamError("weights must be finite and non-negative");
      total += w;
    }
    if (total <= 0.0)
      throw ParamError("weights sum to zero");
    for (double& w : weights)
      w /= total;
    return Distribution(n, std::move(weights));
  }

  int dimension() const { return n_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t index) const { return probs_[index]; }
  std::span<const double> probs() const { return probs_; }

  friend bool operator==(const Distribution&, const Distribution&) = default;

private:
  int n_ = 0;
  std::vector<double> probs_;
};

/// <f, g>_D = sum_x D(x) f(x) g(x).
inline double weighted_inner(const BooleanFunction& f, std::span<const double> g,
                             const Distribution& D) {
  if (f.dimension() != D.dimension() || g.size() != f.size())
    throw DimensionError("weighted_inner: operands disagree on dimension");
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    acc += D[i] * f.at(i) * g[i];
  return acc;
}

// ---------------------------------------------------------------------------------------------
// Logic formulas under TRUE <-> +1.

/// Named groups of coordinates, e.g. {"x", point}, {"z", point}.
using Assignment = std::map<std::string, Point, std::less<>>;

class LogicFormula {
public:
  /// Product is the +-1 product of the children, i.e. an XNOR chain; it is what turns
  /// prod_i (x_i OR z_i) into a parity.
  enum class Kind { Literal, Not, And, Or, Product };

  static LogicFormula literal(std::string group, int index) {
    LogicFormula f(Kind::Literal);
    f.group_ = std::move(group);
    f.index_ = index;
    return f;
  }
  static LogicFormula negation(LogicFormula child) {
    LogicFormula f(Kind::Not);
    f.children_.push_back(std::move(child));
    return f;
  }
  static LogicFormula all_of(std::vector<LogicFormula> children) {
    return LogicFormula(Kind::And, std::move(children));
  }
  static LogicFormula any_of(std::vector<LogicFormula> children) {
    return LogicFormula(Kind::Or, std::move(children));
  }
  static LogicFormula product(std::vector<LogicFormula> children) {
    return LogicFormula(Kind::Product, std::move(children));
  }

  Kind kind() const { return kind_; }
  const std::vector<LogicFormula>& children() const { return children_; }

  int eval(const Assignment& a) const {
    switch (kind_) {
    case Kind::Literal: {
      auto it = a.find(group_);
      if (it == a.end())
        throw EvalError("unbound coordinate group '" + group_ + "'");
      if (index_ < 0 || index_ >= it->second.n)
        throw EvalError("coordinate " + group_ + "[" + std::to_string(index_) + "] is unbound");
      return it->second[index_];
    }
    case Kind::Not:
      return -children_.front().eval(a);
    // No short-circuit: an unbound literal raises whatever the other children evaluate to.
    case Kind::And: {
      int v = 1;
      for (const auto& c : children_)
        if (c.eval(a) == -1)
          v = -1;
      return v;
    }
    case Kind::Or: {
      int v = -1;
      for (const auto& c : children_)
        if (c.eval(a) == 1)
          v = 1;
      return v;
    }
    case Kind::Product: {
      int v = 1;
      for (const auto& c : children_)
        v *= c.eval(a);
      return v;
    }
    }
    return 1;
  }

private:
  explicit LogicFormula(Kind k) : kind_(k) {}
  LogicFormula(Kind k, std::vector<LogicFormula> children)
      : kind_(k), children_(std::move(children)) {}

  Kind kind_;
  std::string group_;
  int index_ = 0;
  std::vector<LogicFormula> children_;
};

inline int eval_formula(const LogicFormula& f, const Assignment& a) { return f.eval(a); }

/// F(x, z) = prod_i (x_i OR z_i), which equals the parity of x on {i : z_i = -1}.
inline LogicFormula inner_product_or_formula(int n) {
  std::vector<LogicFormula> factors;
  for (int i = 0; i < n; ++i)
    factors.push_back(LogicFormula::any_of({LogicFormula::literal("x", i),
                                            LogicFormula::literal("z", i)}));
  return LogicFormula::product(std::move(factors));
}

/// AND over `clauses` of OR over `width` literals of `group`, coordinate i*width + j.
inline LogicFormula and_or_formula(int clauses, int width, const std::string& group = "x") {
  std::vector<LogicFormula> terms;
  for (int i = 0; i < clauses; ++i) {
    std::vector<LogicFormula> lits;
    for (int j = 0; j < width; ++j)
      lits.push_back(LogicFormula::literal(group, i * width + j));
    terms.push_back(LogicFormula::any_of(std::move(lits)));
  }
  return LogicFormula::all_of(std::move(terms));
}

} // namespace hardness
