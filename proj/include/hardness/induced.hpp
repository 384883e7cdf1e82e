#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include "hardness/boolean_core.hpp"
#include "hardness/family.hpp"

namespace hardness {

/// A whole family packaged as one learning problem over the product space X x Z.
/// Product point (x, z) has index x.bits | (z.bits << n).
struct InducedPair {
  int x_dimension = 0;
  int z_dimension = 0;
  BooleanFunction F;
  Distribution D;

  Point product_point(Point x, Point z) const {
    return Point{x_dimension + z_dimension, x.bits | (z.bits << x_dimension)};
  }
};

/// F(x, z) = phi(z)(x) and D'(x, z) = D_z(x) / |A|, where codes[i] is the z labelling member i.
/// Off the family (z not a code, or x outside the support) F is +1 and D' is 0.
inline InducedPair induced_pair(const LabeledFamily& a, std::span<const Point> codes) {
  if (codes.size() != a.size())
    throw BijectionError("need exactly one z code per family member");
  const int n = a.dimension();
  const int nz = codes.front().n;
  if (nz < 1)
    throw DimensionError("z codes must have dimension at least 1");
  if (n + nz > kMaxDimension)
    throw DomainTooLarge("product space of dimension " + std::to_string(n + nz) +
                         " exceeds the dense-table cap");
  std::set<std::uint32_t> seen;
  for (const Point& z : codes) {
    if (z.n != nz)
      throw DimensionError("z codes disagree on dimension");
    if (!seen.insert(z.bits).second)
      throw BijectionError("z codes are not distinct");
  }
  const int total = n + nz;
  std::vector<std::int8_t> f(cube_size(total), 1);
  std::vector<double> d(cube_size(total), 0.0);
  const double weight = 1.0 / static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Member& m = a.member(i);
    for (std::size_t j = 0; j < a.support_size(); ++j) {
      const std::uint32_t idx = a.support()[j].bits | (codes[i].bits << n);
      f[idx] = m.f[j];
      d[idx] = weight * m.D[j];
    }
  }
  return {n, nz, BooleanFunction(total, std::move(f)), Distribution(total, std::move(d))};
}

/// For build_parity_family(n): member I is labelled by z with z_i = -1 exactly for i in I.
inline std::vector<Point> parity_codes(int n) {
  std::vector<Point> codes(cube_size(n));
  for (std::uint32_t i = 0; i < codes.size(); ++i)
    codes[i] = Point{n, i};
  return codes;
}

} // namespace hardness
