#pragma once

// Pattern-matrix families. Inputs x in {+-1}^N are split into n consecutive blocks of size N/n;
// a selector V picks one coordinate per block and a shift w in {+-1}^n flips the projection,
// giving the member f_{V,w}(x) = phi(x|_V xor w) with D_{V,w}(x) = 2^{-(N-n)} mu(x|_V xor w).
// Members are ordered lexicographically in (V, w).

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hardness/boolean_core.hpp"
#include "hardness/family.hpp"
#include "hardness/linalg.hpp"
#include "hardness/parallel.hpp"

namespace hardness {

inline void check_blocks(int N, int n) {
  if (n < 1 || N < 1)
    throw ParamError("block parameters must be positive");
  if (N % n != 0)
    throw ParamError("n must divide N");
}

/// One coordinate per block: choice[i] in [0, N/n) is the offset inside block i.
struct BlockSelector {
  int N = 0;
  int n = 0;
  std::vector<int> choice;

  int block_size() const { return N / n; }
  int coordinate(int i) const { return i * block_size() + choice[static_cast<std::size_t>(i)]; }
  bool operator==(const BlockSelector&) const = default;
};

inline std::size_t selector_count(int N, int n) {
  check_blocks(N, n);
  std::size_t c = 1;
  for (int i = 0; i < n; ++i)
    c *= static_cast<std::size_t>(N / n);
  return c;
}

/// The index-th selector in lexicographic order (block 0 most significant).
inline BlockSelector selector_at(int N, int n, std::size_t index) {
  BlockSelector v{N, n, std::vector<int>(static_cast<std::size_t>(n))};
  const std::size_t s = static_cast<std::size_t>(N / n);
  for (int i = n - 1; i >= 0; --i) {
    v.choice[static_cast<std::size_t>(i)] = static_cast<int>(index % s);
    index /= s;
  }
  return v;
}

inline std::vector<BlockSelector> all_selectors(int N, int n) {
  const std::size_t count = selector_count(N, n);
  std::vector<BlockSelector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(selector_at(N, n, i));
  return out;
}

/// Coordinate j of the result is x_{V_j} w_j.
inline Point project_xor(Point x, const BlockSelector& v, Point w) {
  if (x.n != v.N || w.n != v.n || static_cast<int>(v.choice.size()) != v.n)
    throw DimensionError("project_xor: x, V and w disagree on dimensions");
  std::uint32_t bits = 0;
  for (int j = 0; j < v.n; ++j) {
    const std::uint32_t xb = (x.bits >> v.coordinate(j)) & 1u;
    bits |= (xb ^ ((w.bits >> j) & 1u)) << j;
  }
  return Point{v.n, bits};
}

/// Dense 2^N x (N/n)^n 2^n matrix with entry phi(x|_V xor w); column V * 2^n + w.
inline DenseMatrix pattern_matrix(int N, int n, std::span<const double> phi) {
  check_blocks(N, n);
  if (N > kMaxDimension)
    throw DomainTooLarge("pattern matrix needs N <= " + std::to_string(kMaxDimension));
  if (phi.size() != cube_size(n))
    throw DimensionError("inner function table must have 2^n entries");
  const std::size_t rows = cube_size(N);
  const double cols = static_cast<double>(selector_count(N, n)) * static_cast<double>(phi.size());
  if (static_cast<double>(rows) * cols > static_cast<double>(DenseMatrix::kMaxEntries))
    throw DomainTooLarge("pattern matrix exceeds the dense-matrix cap");
  const std::vector<BlockSelector> selectors = all_selectors(N, n);
  DenseMatrix m(rows, static_cast<std::size_t>(cols));
  parallel_for(rows, [&](std::size_t x) {
    auto row = m.row(x);
    const Point px{N, static_cast<std::uint32_t>(x)};
    for (std::size_t v = 0; v < selectors.size(); ++v)
      for (std::uint32_t w = 0; w < phi.size(); ++w)
        row[v * phi.size() + w] = phi[project_xor(px, selectors[v], Point{n, w}).bits];
  });
  return m;
}

/// AND over `clauses` of OR over `width` inputs, TRUE as +1, input i*width + j.
inline BooleanFunction and_or_function(int clauses, int width) {
  if (clauses < 1 || width < 1)
    throw ParamError("AND-OR shape must be positive");
  if (clauses * width > kMaxDimension)
    throw DomainTooLarge("AND-OR function needs at most " + std::to_string(kMaxDimension) +
                         " inputs");
  return BooleanFunction::from_fn(clauses * width, [&](Point x) {
    for (int i = 0; i < clauses; ++i) {
      bool any = false;
      for (int j = 0; j < width && !any; ++j)
        any = x[i * width + j] == 1;
      if (!any)
        return -1;
    }
    return 1;
  });
}

/// MP_m: AND over m clauses of OR over 4 m^2 inputs, n = 4 m^3.
inline BooleanFunction mp_function(int m) {
  if (m < 1)
    throw ParamError("m must be at least 1");
  if (m >= 2)
    throw DomainTooLarge("MP_m needs 4 m^3 inputs; only m = 1 fits the dense-table cap");
  return and_or_function(m, 4 * m * m);
}

/// Inner function of a pattern family; `shape` is set when it is an AND of ORs.
struct InnerFunction {
  BooleanFunction table;
  std::optional<std::pair<int, int>> shape; // (clauses, width)

  static InnerFunction and_or(int clauses, int width) {
    return {and_or_function(clauses, width), std::pair{clauses, width}};
  }
  static InnerFunction mp(int m) {
    return {mp_function(m), std::pair{m, 4 * m * m}};
  }
};

struct PatternFamilySpec {
  InnerFunction inner;
  int N = 8;
  std::optional<Distribution> mu; // uniform when unset

  int n() const { return inner.table.dimension(); }
};

struct PatternFamily {
  LabeledFamily family;
  int N = 0;
  int n = 0;
  InnerFunction inner;
  Distribution mu;

  /// Member index = selector index * 2^n + w.
  BlockSelector selector(std::size_t member) const {
    return selector_at(N, n, member >> n);
  }
  Point shift(std::size_t member) const {
    return Point{n, static_cast<std::uint32_t>(member & (cube_size(n) - 1))};
  }
};

/// The size at which the variance certificate 17^{-2m} is stated.
inline double cited_scale(int n) { return std::pow(17.0, 6) * n; }

inline PatternFamily build_pattern_family(const PatternFamilySpec& spec) {
  const int n = spec.n();
  const int N = spec.N;
  if (static_cast<double>(N) >= cited_scale(n))
    throw InfeasibleScale("N = " + std::to_string(N) + " reaches the cited scale N = 17^6 n = " +
                          std::to_string(static_cast<long long>(cited_scale(n))) +
                          "; dense tables at that size are out of reach");
  check_blocks(N, n);
  if (N > kMaxDimension)
    throw DomainTooLarge("pattern family needs N <= " + std::to_string(kMaxDimension));
  Distribution mu = spec.mu ? *spec.mu : Distribution::uniform(n);
  if (mu.dimension() != n)
    throw ParamError("mu must be a distribution over {+-1}^n");

  const std::size_t members = selector_count(N, n) * cube_size(n);
  const std::size_t points = cube_size(N);
  if (static_cast<double>(members) * static_cast<double>(points) >
      static_cast<double>(DenseMatrix::kMaxEntries))
    throw DomainTooLarge("pattern family exceeds the dense-table cap");

  const double scale = std::ldexp(1.0, -(N - n));
  std::vector<Member> out(members);
  parallel_for(members, [&](std::size_t i) {
    const BlockSelector v = selector_at(N, n, i >> n);
    const Point w{n, static_cast<std::uint32_t>(i & (cube_size(n) - 1))};
    Member& m = out[i];
    m.f.resize(points);
    m.D.resize(points);
    for (std::uint32_t x = 0; x < points; ++x) {
      const Point y = project_xor(Point{N, x}, v, w);
      m.f[x] = static_cast<std::int8_t>(spec.inner.table(y));
      m.D[x] = scale * mu[y.bits];
    }
  });
  return {LabeledFamily(N, LabeledFamily::cube(N), std::move(out)), N, n, spec.inner,
          std::move(mu)};
}

/// max |M(A')_{(V,w),x} - 2^{-(N-n)} (M o P)_{x,(V,w)}| with M, P the pattern matrices of the
/// inner function and of mu.
inline double operator_identity_gap(const PatternFamily& p) {
  const DenseMatrix m = pattern_matrix(p.N, p.n, p.inner.table.to_real());
  const DenseMatrix q = pattern_matrix(p.N, p.n, p.mu.probs());
  const DenseMatrix mp = m.hadamard(q);
  const DenseMatrix op = operator_matrix(p.family).matrix();
  const double scale = std::ldexp(1.0, -(p.N - p.n));
  double worst = 0.0;
  for (std::size_t i = 0; i < op.rows(); ++i)
    for (std::size_t x = 0; x < op.cols(); ++x)
      worst = std::max(worst, std::abs(op(i, x) - scale * mp(x, i)));
  return worst;
}

/// Subcube encodings for an AND-OR inner function of shape (clauses, width). Coordinate
/// ((block * (N/n) + k) * 2 + e) stands for (i, j, k, eps) with block = i * width + j and
/// e = 0 for eps = +1. Psi(x) marks x_{ijk} = eps; Phi(V, w) marks w_ij = eps and V_ij = k.
/// An indicator 1 is the logical TRUE, i.e. the value +1.
struct SubcubeEncoding {
  int N = 0;
  int n = 0;
  int clauses = 0;
  int width = 0;

  int dimension() const { return 2 * N; }

  Point psi(Point x) const {
    std::uint32_t bits = 0;
    for (int c = 0; c < N; ++c) {
      const int e = x[c] == 1 ? 0 : 1;
      // Indicator false (value -1) sets the bit.
      bits |= 1u << (2 * c + (1 - e));
    }
    return Point{dimension(), bits};
  }

  Point phi(const BlockSelector& v, Point w) const {
    std::uint32_t bits = (dimension() >= 32) ? ~0u : ((1u << dimension()) - 1u);
    const int s = N / n;
    for (int b = 0; b < n; ++b) {
      const int e = w[b] == 1 ? 0 : 1;
      const int c = b * s + v.choice[static_cast<std::size_t>(b)];
      bits &= ~(1u << (2 * c + e));
    }
    return Point{dimension(), bits};
  }

  /// AND_i OR_{j,k,eps} (Psi_{ijk eps} AND Phi_{ijk eps}) over groups "psi" and "phi".
  LogicFormula formula() const {
    const int s = N / n;
    std::vector<LogicFormula> terms;
    for (int i = 0; i < clauses; ++i) {
      std::vector<LogicFormula> lits;
      for (int j = 0; j < width; ++j)
        for (int k = 0; k < s; ++k)
          for (int e = 0; e < 2; ++e) {
            const int idx = ((i * width + j) * s + k) * 2 + e;
            lits.push_back(LogicFormula::all_of(
                {LogicFormula::literal("psi", idx), LogicFormula::literal("phi", idx)}));
          }
      terms.push_back(LogicFormula::any_of(std::move(lits)));
    }
    return LogicFormula::all_of(std::move(terms));
  }
};

struct EncodedFamily {
  LabeledFamily family; // over Psi(X) inside {+-1}^{2N}
  PointMap map;         // domain Psi(x), image x
  std::vector<Point> codes; // Phi(V, w) per member
  SubcubeEncoding encoding;
};

inline EncodedFamily encode_subcube(const PatternFamily& p) {
  if (!p.inner.shape)
    throw ParamError("subcube encoding needs an AND-OR inner function");
  SubcubeEncoding enc{p.N, p.n, p.inner.shape->first, p.inner.shape->second};
  if (enc.dimension() > kMaxDimension)
    throw DomainTooLarge("encoded dimension 2N = " + std::to_string(enc.dimension()) +
                         " exceeds the dense-table cap");
  EncodedFamily out{{}, {}, {}, enc};
  for (const Point& x : p.family.support()) {
    out.map.domain.push_back(enc.psi(x));
    out.map.image.push_back(x);
  }
  out.family = apply_isomorphism(p.family, out.map);
  out.codes.reserve(p.family.size());
  for (std::size_t i = 0; i < p.family.size(); ++i)
    out.codes.push_back(enc.phi(p.selector(i), p.shift(i)));
  return out;
}

struct IdentityCheck {
  std::size_t samples = 0;
  std::size_t mismatches = 0;
};

/// Compares f_{V,w}(x) with the encoded formula on seeded random (member, x) pairs.
inline IdentityCheck check_encoding_identity(const PatternFamily& p, const EncodedFamily& e,
                                             std::size_t samples, std::uint64_t seed) {
  const LogicFormula formula = e.encoding.formula();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_member(0, p.family.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_point(0, p.family.support_size() - 1);
  IdentityCheck r{samples, 0};
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t i = pick_member(rng);
    const std::size_t j = pick_point(rng);
    Assignment a;
    a.emplace("psi", e.encoding.psi(p.family.support()[j]));
    a.emplace("phi", e.codes[i]);
    if (formula.eval(a) != p.family.member(i).f[j])
      ++r.mismatches;
  }
  return r;
}

/// ||A o B||_2 by power iteration.
inline double hadamard_norm(const DenseMatrix& a, const DenseMatrix& b,
                            const PowerIterationOptions& opt = {}) {
  return spectral_norm(a.hadamard(b), opt).norm;
}

} // namespace hardness
