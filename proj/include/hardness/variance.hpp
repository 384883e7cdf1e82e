#pragma once

// Var(A, phi) = mean over members of <f, phi>_D^2, and Var(A) = sup over ||phi||_inf <= 1.
//
// Var(A, .) is a positive-semidefinite quadratic form in phi, hence convex, so its maximum over
// the cube [-1,1]^X is attained at a vertex phi in {-1,+1}^X. variance_exact enumerates those
// vertices; beyond |X| = 24 only the certified sandwich lower <= Var(A) <= upper is available.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hardness/family.hpp"
#include "hardness/linalg.hpp"
#include "hardness/parallel.hpp"

namespace hardness {

inline constexpr int kMaxExactSupport = 24;

struct VarianceReport {
  std::optional<double> exact;
  double upper_spectral = 0.0;
  double lower_member = 0.0;
  std::optional<std::vector<int>> argmax_phi;
};

inline void check_probe(std::span<const double> phi) {
  for (double v : phi)
    if (!(std::abs(v) <= 1.0 + 1e-12))
      throw NormError("probe violates ||phi||_inf <= 1");
}

inline double variance_at(const LabeledFamily& a, std::span<const double> phi) {
  if (phi.size() != a.support_size())
    throw DimensionError("probe length does not match the family support");
  check_probe(phi);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double c = a.inner(i, phi);
    acc += c * c;
  }
  return acc / static_cast<double>(a.size());
}

struct ExactVariance {
  double value = 0.0;
  std::vector<int> argmax;
};

/// Maximum of Var(A, phi) over phi in {-1,+1}^X. Since Var(A, phi) = Var(A, -phi) the last
/// support coordinate is pinned to +1. Vertices are split into fixed chunks of 2^12 walked in
/// Gray-code order; each chunk starts from freshly computed correlations, so the result does
/// not depend on the worker count. Ties go to the first vertex in enumeration order.
inline ExactVariance variance_exact(const LabeledFamily& a) {
  const std::size_t nx = a.support_size();
  if (nx > static_cast<std::size_t>(kMaxExactSupport))
    throw DomainTooLarge("exact variance needs |X| <= " + std::to_string(kMaxExactSupport) +
                         ", family support has " + std::to_string(nx) + " points");
  const std::size_t na = a.size();
  // Column-major signed weights: weights[x * na + i] = f_i(x) D_i(x).
  std::vector<double> weights(nx * na);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t x = 0; x < nx; ++x)
      weights[x * na + i] = a.member(i).f[x] * a.member(i).D[x];

  const int free_bits = static_cast<int>(nx) - 1;
  const int chunk_bits = std::min(free_bits, 12);
  const std::uint64_t chunks = std::uint64_t{1} << (free_bits - chunk_bits);
  const std::uint64_t per_chunk = std::uint64_t{1} << chunk_bits;

  struct Best {
    double value = -1.0;
    std::uint64_t pattern = 0;
  };
  std::vector<Best> best(chunks);

  parallel_for(chunks, [&](std::size_t c) {
    std::vector<double> corr(na, 0.0);
    std::vector<double> sign(nx, 1.0);
    const std::uint64_t high = static_cast<std::uint64_t>(c) << chunk_bits;
    auto pattern_of = [&](std::uint64_t i) { return high | (i ^ (i >> 1)); };

    const std::uint64_t first = pattern_of(0);
    for (std::size_t x = 0; x < nx; ++x)
      sign[x] = ((first >> x) & 1u) ? -1.0 : 1.0;
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t i = 0; i < na; ++i)
        corr[i] += weights[x * na + i] * sign[x];

    auto score = [&] {
      double s = 0.0;
      for (double v : corr)
        s += v * v;
      return s;
    };
    Best local{score(), first};
    for (std::uint64_t i = 1; i < per_chunk; ++i) {
      const int x = std::countr_zero(i);
      sign[x] = -sign[x];
      const double step = 2.0 * sign[x];
      const double* w = weights.data() + static_cast<std::size_t>(x) * na;
      for (std::size_t k = 0; k < na; ++k)
        corr[k] += step * w[k];
      const double s = score();
      if (s > local.value)
        local = {s, pattern_of(i)};
    }
    best[c] = local;
  });

  Best winner;
  for (const Best& b : best)
    if (b.value > winner.value)
      winner = b;

  ExactVariance out;
  out.argmax.resize(nx);
  RealTable phi(nx);
  for (std::size_t x = 0; x < nx; ++x) {
    out.argmax[x] = ((winner.pattern >> x) & 1u) ? -1 : 1;
    phi[x] = out.argmax[x];
  }
  out.value = variance_at(a, phi);
  return out;
}

/// (|X| / |A|) ||M(A)||_2^2, a certified upper bound on Var(A).
inline double variance_upper_spectral(const LabeledFamily& a,
                                      const PowerIterationOptions& opt = {}) {
  const SpectralNorm s = spectral_norm(operator_matrix(a).matrix(), opt);
  return static_cast<double>(a.support_size()) / static_cast<double>(a.size()) * s.norm_squared;
}

/// Each member's own function is a feasible probe, so the best of them lower-bounds Var(A).
inline double variance_lower_members(const LabeledFamily& a) {
  std::vector<double> values(a.size());
  parallel_for(a.size(), [&](std::size_t i) { values[i] = variance_at(a, a.member_table(i)); });
  return *std::max_element(values.begin(), values.end());
}

inline VarianceReport variance_report(const LabeledFamily& a, bool want_exact) {
  VarianceReport r;
  r.upper_spectral = variance_upper_spectral(a);
  r.lower_member = variance_lower_members(a);
  if (want_exact) {
    ExactVariance e = variance_exact(a);
    r.exact = e.value;
    r.argmax_phi = std::move(e.argmax);
  }
  return r;
}

/// Exact Var(A) when the support is small enough, otherwise the spectral upper bound.
inline double certified_variance(const LabeledFamily& a, std::size_t exact_cutoff = 16) {
  if (a.support_size() <= exact_cutoff)
    return variance_exact(a).value;
  return variance_upper_spectral(a);
}

} // namespace hardness
