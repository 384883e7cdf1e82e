#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "hardness/pattern.hpp"
#include "hardness/variance.hpp"
#include "oracles.hpp"

using namespace hardness;

namespace {

/// y_j = x_{V_j} * w_j computed on +-1 values.
std::vector<int> naive_projection(Point x, const BlockSelector& v, Point w) {
  std::vector<int> y(static_cast<std::size_t>(v.n));
  for (int j = 0; j < v.n; ++j)
    y[static_cast<std::size_t>(j)] = x[j * (v.N / v.n) + v.choice[static_cast<std::size_t>(j)]] * w[j];
  return y;
}

PatternFamily small_or_family(std::optional<Distribution> mu = std::nullopt) {
  return build_pattern_family({InnerFunction::and_or(1, 2), 4, std::move(mu)});
}

} // namespace

TEST(Selectors, LexicographicWithFirstBlockMostSignificant) {
  EXPECT_EQ(selector_count(6, 2), 9u);
  EXPECT_EQ(selector_at(6, 2, 0).choice, (std::vector<int>{0, 0}));
  EXPECT_EQ(selector_at(6, 2, 1).choice, (std::vector<int>{0, 1}));
  EXPECT_EQ(selector_at(6, 2, 3).choice, (std::vector<int>{1, 0}));
  EXPECT_EQ(selector_at(6, 2, 8).choice, (std::vector<int>{2, 2}));
  EXPECT_EQ(selector_at(6, 2, 5).coordinate(1), 5);
  EXPECT_THROW(selector_count(7, 2), ParamError);
}

TEST(ProjectXor, MatchesCoordinateOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + trial % 4;
    const int N = n * (1 + trial % 3);
    const BlockSelector v = selector_at(N, n, rng() % selector_count(N, n));
    const Point x{N, static_cast<std::uint32_t>(rng() & (cube_size(N) - 1))};
    const Point w{n, static_cast<std::uint32_t>(rng() & (cube_size(n) - 1))};
    const Point y = project_xor(x, v, w);
    ASSERT_EQ(Point::from_signs(naive_projection(x, v, w)), y);
  }
}

TEST(ProjectXor, SmallCasesAndDimensionChecks) {
  const BlockSelector v{4, 2, {1, 0}};
  // x = (+1, -1, -1, +1): V picks x_1 = -1 and x_2 = -1.
  const std::vector<int> xs{1, -1, -1, 1};
  const Point x = Point::from_signs(xs);
  EXPECT_EQ(project_xor(x, v, Point{2, 0}), (Point{2, 0b11}));
  EXPECT_EQ(project_xor(x, v, Point{2, 0b01}), (Point{2, 0b10}));
  EXPECT_THROW(project_xor(Point{3, 0}, v, Point{2, 0}), DimensionError);
  EXPECT_THROW(project_xor(x, v, Point{3, 0}), DimensionError);
}

TEST(PatternMatrix, SingleBlockIsTheShiftMatrix) {
  const RealTable phi{0.5, -1.0, 0.25, 1.0};
  const DenseMatrix m = pattern_matrix(2, 2, phi);
  ASSERT_EQ(m.rows(), 4u);
  ASSERT_EQ(m.cols(), 4u);
  for (std::uint32_t x = 0; x < 4; ++x)
    for (std::uint32_t w = 0; w < 4; ++w)
      EXPECT_EQ(m(x, w), phi[x ^ w]);
}

TEST(PatternMatrix, ShapeAndEntries) {
  const RealTable phi = and_or_function(1, 2).to_real();
  const DenseMatrix m = pattern_matrix(4, 2, phi);
  ASSERT_EQ(m.rows(), 16u);
  ASSERT_EQ(m.cols(), 16u);
  for (std::uint32_t x = 0; x < 16; ++x)
    for (std::size_t v = 0; v < 4; ++v)
      for (std::uint32_t w = 0; w < 4; ++w) {
        const auto y = naive_projection(Point{4, x}, selector_at(4, 2, v), Point{2, w});
        const double expect = (y[0] == 1 || y[1] == 1) ? 1.0 : -1.0;
        ASSERT_EQ(m(x, v * 4 + w), expect);
      }
  EXPECT_THROW(pattern_matrix(4, 2, RealTable(8, 0.0)), DimensionError);
  EXPECT_THROW(pattern_matrix(25, 5, RealTable(32, 0.0)), DomainTooLarge);
}

TEST(InnerFunctions, MpOneIsAWideOr) {
  const BooleanFunction mp1 = mp_function(1);
  ASSERT_EQ(mp1.dimension(), 4);
  for (std::uint32_t x = 0; x < 16; ++x)
    EXPECT_EQ(mp1.at(x), x == 15u ? -1 : 1);
  EXPECT_THROW(mp_function(2), DomainTooLarge);
  EXPECT_THROW(mp_function(0), ParamError);
  EXPECT_THROW(and_or_function(5, 5), DomainTooLarge);
}

TEST(InnerFunctions, AndOrMatchesFormula) {
  const BooleanFunction f = and_or_function(2, 3);
  const LogicFormula g = and_or_formula(2, 3);
  for (std::uint32_t x = 0; x < 64; ++x)
    ASSERT_EQ(f.at(x), g.eval({{"x", Point{6, x}}}));
}

TEST(PatternFamily, MpOneAtEightHasAllMembersAndNormalizedDistributions) {
  const PatternFamily p = build_pattern_family({InnerFunction::mp(1), 8, std::nullopt});
  EXPECT_EQ(p.family.size(), 256u);
  EXPECT_EQ(p.family.support_size(), 256u);
  for (const Member& m : p.family.members()) {
    double total = 0.0;
    for (double d : m.D)
      total += d;
    ASSERT_NEAR(total, 1.0, 1e-12);
  }
  EXPECT_LE(operator_identity_gap(p), 1e-15);
}

TEST(PatternFamily, MembersMatchDirectDefinition) {
  std::vector<double> weights{0.1, 0.2, 0.3, 0.4};
  const PatternFamily p = small_or_family(Distribution(2, weights));
  for (std::size_t i = 0; i < p.family.size(); ++i) {
    const BlockSelector v = p.selector(i);
    const Point w = p.shift(i);
    for (std::uint32_t x = 0; x < 16; ++x) {
      const auto y = naive_projection(Point{4, x}, v, w);
      const Point py = Point::from_signs(y);
      ASSERT_EQ(p.family.member(i).f[x], (y[0] == 1 || y[1] == 1) ? 1 : -1);
      ASSERT_DOUBLE_EQ(p.family.member(i).D[x], 0.25 * weights[py.bits]);
    }
  }
  EXPECT_LE(operator_identity_gap(p), 1e-15);
}

TEST(PatternFamily, ScaleAndShapeChecks) {
  const int n = 4;
  const int cited = static_cast<int>(cited_scale(n));
  EXPECT_EQ(cited, 96550276);
  EXPECT_THROW(build_pattern_family({InnerFunction::mp(1), cited, std::nullopt}), InfeasibleScale);
  EXPECT_THROW(build_pattern_family({InnerFunction::mp(1), 10, std::nullopt}), ParamError);
  EXPECT_THROW(build_pattern_family({InnerFunction::mp(1), 24, std::nullopt}), DomainTooLarge);
  EXPECT_THROW(build_pattern_family({InnerFunction::mp(1), 8, Distribution::uniform(3)}),
               ParamError);
}

TEST(SubcubeEncoding, PsiAndPhiAreInjectiveWithTwoNCoordinates) {
  const PatternFamily p = build_pattern_family({InnerFunction::mp(1), 8, std::nullopt});
  const EncodedFamily e = encode_subcube(p);
  EXPECT_EQ(e.encoding.dimension(), 16);
  EXPECT_EQ(e.family.dimension(), 16);
  std::set<std::uint32_t> psi, phi;
  for (const Point& x : p.family.support())
    psi.insert(e.encoding.psi(x).bits);
  for (const Point& c : e.codes)
    phi.insert(c.bits);
  EXPECT_EQ(psi.size(), 256u);
  EXPECT_EQ(phi.size(), 256u);
}

TEST(SubcubeEncoding, IndicatorLayout) {
  const SubcubeEncoding enc{2, 2, 1, 2};
  // x = (+1, -1): coordinate 0 marks eps = +1 (index 0), coordinate 1 marks eps = -1 (index 3).
  const std::vector<int> xs{1, -1};
  const Point psi = enc.psi(Point::from_signs(xs));
  EXPECT_EQ(psi[0], 1);
  EXPECT_EQ(psi[1], -1);
  EXPECT_EQ(psi[2], -1);
  EXPECT_EQ(psi[3], 1);
  const BlockSelector v{2, 2, {0, 0}};
  const std::vector<int> ws{-1, 1};
  const Point phi = enc.phi(v, Point::from_signs(ws));
  EXPECT_EQ(phi[0], -1);
  EXPECT_EQ(phi[1], 1);
  EXPECT_EQ(phi[2], 1);
  EXPECT_EQ(phi[3], -1);
}

TEST(SubcubeEncoding, FormulaReproducesEveryMemberOnSamples) {
  const PatternFamily p = build_pattern_family({InnerFunction::mp(1), 8, std::nullopt});
  const EncodedFamily e = encode_subcube(p);
  const IdentityCheck c = check_encoding_identity(p, e, 1000, 7);
  EXPECT_EQ(c.samples, 1000u);
  EXPECT_EQ(c.mismatches, 0u);
}

TEST(SubcubeEncoding, FormulaExhaustiveOnTwoClauses) {
  const PatternFamily p = build_pattern_family({InnerFunction::and_or(2, 1), 4, std::nullopt});
  const EncodedFamily e = encode_subcube(p);
  const LogicFormula f = e.encoding.formula();
  for (std::size_t i = 0; i < p.family.size(); ++i)
    for (std::size_t x = 0; x < p.family.support_size(); ++x) {
      Assignment a{{"psi", e.encoding.psi(p.family.support()[x])}, {"phi", e.codes[i]}};
      ASSERT_EQ(f.eval(a), p.family.member(i).f[x]);
    }
}

TEST(SubcubeEncoding, VarianceTransportsExactly) {
  const PatternFamily p = small_or_family();
  const EncodedFamily e = encode_subcube(p);
  const double original = variance_exact(p.family).value;
  EXPECT_NEAR(variance_exact(e.family).value, original, 1e-12);
  EXPECT_NEAR(oracle::brute_variance(p.family), original, 1e-12);
  EXPECT_NEAR(variance_upper_spectral(e.family), variance_upper_spectral(p.family), 1e-10);
}

TEST(SubcubeEncoding, RequiresAndOrShape) {
  PatternFamily p = small_or_family();
  p.inner.shape.reset();
  EXPECT_THROW(encode_subcube(p), ParamError);
}

TEST(HadamardNorm, MatchesEigenOracle) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t r = 4 + trial, c = 3 + 2 * trial;
    DenseMatrix a(r, c), b(r, c), prod(r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        a(i, j) = u(rng);
        b(i, j) = u(rng);
        prod(i, j) = a(i, j) * b(i, j);
      }
    const double expect = oracle::eigen_spectral_norm(prod);
    EXPECT_NEAR(hadamard_norm(a, b), expect, 1e-8 * expect);
  }
  EXPECT_THROW(hadamard_norm(DenseMatrix(2, 3), DenseMatrix(3, 2)), DimensionError);
}

TEST(HadamardNorm, UniformMuScalesThePatternMatrix) {
  // With uniform mu every entry of P is 2^{-n}, so ||M o P|| = 2^{-n} ||M||.
  const RealTable phi = mp_function(1).to_real();
  const DenseMatrix m = pattern_matrix(8, 4, phi);
  const DenseMatrix q = pattern_matrix(8, 4, Distribution::uniform(4).probs());
  EXPECT_NEAR(hadamard_norm(m, q), spectral_norm(m).norm / 16.0, 1e-9);
}
