#pragma once

// Labeled distribution families: finite lists of pairs (f, D) over a common explicit support X,
// sampled uniformly. Member tables are stored support-indexed, so families living on a strict
// subset of a large cube (for example encoded pattern families) stay small.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hardness/boolean_core.hpp"
#include "hardness/linalg.hpp"
#include "hardness/parallel.hpp"

namespace hardness {

struct LabeledPair {
  BooleanFunction f;
  Distribution D;
};

/// One member restricted to the family support; position j refers to support point j.
struct Member {
  std::vector<std::int8_t> f;
  std::vector<double> D;

  friend bool operator==(const Member&, const Member&) = default;
};

class LabeledFamily {
public:
  LabeledFamily() = default;

  LabeledFamily(int n, std::vector<Point> support, std::vector<Member> members)
      : n_(n), support_(std::move(support)), members_(std::move(members)) {
    check_dimension(n_);
    if (support_.empty())
      throw ParamError("family support is empty");
    if (members_.empty())
      throw ParamError("family has no members");
    position_.reserve(support_.size());
    for (std::size_t j = 0; j < support_.size(); ++j) {
      const Point& p = support_[j];
      if (p.n != n_ || (n_ < 32 && (p.bits >> n_) != 0))
        throw DimensionError("support point dimension disagrees with family dimension");
      if (!position_.emplace(p.bits, j).second)
        throw ParamError("support contains a repeated point");
    }
    for (std::size_t i = 0; i < members_.size(); ++i)
      validate(members_[i], i);
  }

  /// Full-cube support in index order.
  static std::vector<Point> cube(int n) {
    std::vector<Point> pts(cube_size(n));
    for (std::uint32_t i = 0; i < pts.size(); ++i)
      pts[i] = Point{n, i};
    return pts;
  }

  /// Restricts full-cube pairs to `support`; any mass outside the support is rejected.
  static LabeledFamily from_pairs(std::vector<Point> support, std::span<const LabeledPair> pairs) {
    if (pairs.empty())
      throw ParamError("family has no members");
    const int n = pairs.front().f.dimension();
    std::vector<char> inside(cube_size(n), 0);
    for (const Point& p : support)
      if (p.n == n)
        inside.at(p.bits) = 1;
    std::vector<Member> members;
    members.reserve(pairs.size());
    for (const auto& pair : pairs) {
      if (pair.f.dimension() != n || pair.D.dimension() != n)
        throw DimensionError("family members disagree on dimension");
      for (std::size_t x = 0; x < inside.size(); ++x)
        if (!inside[x] && pair.D[x] != 0.0)
          throw ParamError("member distribution puts mass outside the family support");
      Member m;
      for (const Point& p : support) {
        m.f.push_back(static_cast<std::int8_t>(pair.f(p)));
        m.D.push_back(pair.D[p.bits]);
      }
      members.push_back(std::move(m));
    }
    return LabeledFamily(n, std::move(support), std::move(members));
  }

  static LabeledFamily from_pairs(std::span<const LabeledPair> pairs) {
    if (pairs.empty())
      throw ParamError("family has no members");
    return from_pairs(cube(pairs.front().f.dimension()), pairs);
  }

  int dimension() const { return n_; }
  std::size_t size() const { return members_.size(); }
  std::size_t support_size() const { return support_.size(); }
  const std::vector<Point>& support() const { return support_; }
  const std::vector<Member>& members() const { return members_; }
  const Member& member(std::size_t i) const { return members_.at(i); }

  bool full_cube() const {
    if (support_.size() != cube_size(n_))
      return false;
    for (std::size_t j = 0; j < support_.size(); ++j)
      if (support_[j].bits != j)
        return false;
    return true;
  }

  std::optional<std::size_t> position(Point p) const {
    auto it = position_.find(p.bits);
    if (p.n != n_ || it == position_.end())
      return std::nullopt;
    return it->second;
  }

  /// Member i as full-cube tables; f is +1 and D is 0 off the support.
  LabeledPair pair(std::size_t i) const {
    const Member& m = member(i);
    std::vector<std::int8_t> f(cube_size(n_), 1);
    std::vector<double> D(cube_size(n_), 0.0);
    for (std::size_t j = 0; j < support_.size(); ++j) {
      f[support_[j].bits] = m.f[j];
      D[support_[j].bits] = m.D[j];
    }
    return {BooleanFunction(n_, std::move(f)), Distribution(n_, std::move(D))};
  }

  /// <f_i, phi>_{D_i} with phi support-indexed.
  double inner(std::size_t i, std::span<const double> phi) const {
    if (phi.size() != support_.size())
      throw DimensionError("probe length " + std::to_string(phi.size()) +
                           " does not match support size " + std::to_string(support_.size()));
    const Member& m = members_[i];
    double acc = 0.0;
    for (std::size_t j = 0; j < phi.size(); ++j)
      acc += m.D[j] * m.f[j] * phi[j];
    return acc;
  }

  /// Member i's own function as a support-indexed real table.
  RealTable member_table(std::size_t i) const {
    const Member& m = member(i);
    return RealTable(m.f.begin(), m.f.end());
  }

  friend bool operator==(const LabeledFamily& a, const LabeledFamily& b) {
    return a.n_ == b.n_ && a.support_ == b.support_ && a.members_ == b.members_;
  }

private:
  void validate(const Member& m, std::size_t i) const {
    const std::string tag = "member " + std::to_string(i);
    if (m.f.size() != support_.size() || m.D.size() != support_.size())
      throw DimensionError(tag + " tables do not match the support size");
    double total = 0.0;
    for (std::size_t j = 0; j < m.f.size(); ++j) {
      if (m.f[j] != 1 && m.f[j] != -1)
        throw DimensionError(tag + " function takes a value outside {-1,+1}");
      if (!(m.D[j] >= 0.0) || !std::isfinite(m.D[j]))
        throw ParamError(tag + " distribution has a negative or non-finite entry");
      total += m.D[j];
    }
    if (std::abs(total - 1.0) > kProbabilityTolerance)
      throw ParamError(tag + " distribution sums to " + std::to_string(total));
  }

  int n_ = 0;
  std::vector<Point> support_;
  std::vector<Member> members_;
  std::unordered_map<std::uint32_t, std::size_t> position_;
};

/// All 2^n parities under the uniform distribution; member I is the parity with subset mask I.
inline LabeledFamily build_parity_family(int n) {
  const std::size_t size = cube_size(n);
  const double p = 1.0 / static_cast<double>(size);
  std::vector<Member> members(size);
  for (std::uint32_t mask = 0; mask < size; ++mask) {
    Member& m = members[mask];
    m.f.resize(size);
    m.D.assign(size, p);
    for (std::uint32_t x = 0; x < size; ++x)
      m.f[x] = static_cast<std::int8_t>(parity_value(mask, x));
  }
  return LabeledFamily(n, LabeledFamily::cube(n), std::move(members));
}

/// Random +-1 functions with random full-support distributions over the whole cube.
inline LabeledFamily random_family(int n, std::size_t members, std::uint64_t seed) {
  const std::size_t size = cube_size(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<Member> out(members);
  for (auto& m : out) {
    m.f.resize(size);
    m.D.resize(size);
    double total = 0.0;
    for (std::size_t x = 0; x < size; ++x) {
      m.f[x] = coin(rng) ? 1 : -1;
      m.D[x] = weight(rng);
      total += m.D[x];
    }
    for (double& d : m.D)
      d /= total;
  }
  return LabeledFamily(n, LabeledFamily::cube(n), std::move(out));
}

/// The |A| x |X| matrix with entries f(x) D(x); (M phi)_i = <f_i, phi>_{D_i}.
class FamilyOperator {
public:
  explicit FamilyOperator(DenseMatrix matrix) : matrix_(std::move(matrix)) {}

  const DenseMatrix& matrix() const { return matrix_; }
  std::vector<double> apply(std::span<const double> phi) const { return matrix_.multiply(phi); }

  double row_abs_sum(std::size_t i) const {
    double acc = 0.0;
    for (double v : matrix_.row(i))
      acc += std::abs(v);
    return acc;
  }

private:
  DenseMatrix matrix_;
};

inline FamilyOperator operator_matrix(const LabeledFamily& a) {
  DenseMatrix m(a.size(), a.support_size());
  parallel_for(a.size(), [&](std::size_t i) {
    const Member& mem = a.member(i);
    auto row = m.row(i);
    for (std::size_t j = 0; j < row.size(); ++j)
      row[j] = mem.f[j] * mem.D[j];
  });
  return FamilyOperator(std::move(m));
}

/// A bijection Psi from a new support (domain) onto the support of an existing family (image).
struct PointMap {
  std::vector<Point> domain;
  std::vector<Point> image;
};

/// Returns {(f o Psi, D o Psi)} over Psi's domain. Psi must hit every support point exactly once.
inline LabeledFamily apply_isomorphism(const LabeledFamily& a, const PointMap& psi) {
  if (psi.domain.size() != psi.image.size())
    throw BijectionError("bijection domain and image differ in length");
  if (psi.image.size() != a.support_size())
    throw BijectionError("bijection does not cover the family support");
  std::vector<std::size_t> source(psi.image.size());
  std::vector<char> hit(a.support_size(), 0);
  for (std::size_t j = 0; j < psi.image.size(); ++j) {
    auto pos = a.position(psi.image[j]);
    if (!pos)
      throw BijectionError("bijection maps into a point outside the family support");
    if (hit[*pos]++)
      throw BijectionError("bijection is not injective");
    source[j] = *pos;
  }
  if (psi.domain.empty())
    throw BijectionError("empty bijection");
  const int n = psi.domain.front().n;
  std::vector<Member> members;
  members.reserve(a.size());
  for (const Member& m : a.members()) {
    Member out;
    out.f.resize(source.size());
    out.D.resize(source.size());
    for (std::size_t j = 0; j < source.size(); ++j) {
      out.f[j] = m.f[source[j]];
      out.D[j] = m.D[source[j]];
    }
    members.push_back(std::move(out));
  }
  try {
    return LabeledFamily(n, psi.domain, std::move(members));
  } catch (const ParamError& e) {
    throw BijectionError(std::string("bijection domain is invalid: ") + e.what());
  }
}

/// Full-cube form: table[x] is the index of Psi(x); the family must live on the whole cube.
inline LabeledFamily apply_isomorphism(const LabeledFamily& a,
                                       std::span<const std::uint32_t> table) {
  const int n = a.dimension();
  if (table.size() != cube_size(n))
    throw BijectionError("permutation table length does not match 2^n");
  PointMap psi;
  for (std::uint32_t x = 0; x < table.size(); ++x) {
    if (table[x] >= table.size())
      throw BijectionError("permutation table entry out of range");
    psi.domain.push_back(Point{n, x});
    psi.image.push_back(Point{n, table[x]});
  }
  return apply_isomorphism(a, psi);
}

} // namespace hardness
