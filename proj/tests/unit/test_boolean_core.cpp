#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "hardness/boolean_core.hpp"
#include "oracles.hpp"

using namespace hardness;

TEST(Point, CoordinatesFollowBitEncoding) {
  const Point p{3, 0b101};
  EXPECT_EQ(p[0], -1);
  EXPECT_EQ(p[1], 1);
  EXPECT_EQ(p[2], -1);
  const std::vector<int> signs{-1, 1, -1};
  EXPECT_EQ(Point::from_signs(signs), p);
  const std::vector<int> bad{1, 0};
  EXPECT_THROW(Point::from_signs(bad), DimensionError);
}

TEST(Dimension, CapsAndFloor) {
  EXPECT_THROW(check_dimension(0), DimensionError);
  EXPECT_THROW(check_dimension(25), DomainTooLarge);
  EXPECT_NO_THROW(check_dimension(24));
  EXPECT_EQ(cube_size(5), 32u);
}

TEST(BooleanFunction, RejectsNonSignEntriesAndWrongLength) {
  EXPECT_THROW(BooleanFunction(2, {1, 1, 0, 1}), DimensionError);
  EXPECT_THROW(BooleanFunction(2, {1, 1, 1}), DimensionError);
  EXPECT_EQ(BooleanFunction::constant(3, -1).at(5), -1);
}

TEST(Distribution, NormalizationIsCheckedNotRepaired) {
  EXPECT_THROW(Distribution(1, {0.5, 0.6}), ParamError);
  EXPECT_THROW(Distribution(1, {1.5, -0.5}), ParamError);
  EXPECT_NO_THROW(Distribution(1, {0.25, 0.75}));
  const Distribution d = Distribution::normalized(1, {1.0, 3.0});
  EXPECT_DOUBLE_EQ(d[1], 0.75);
}

TEST(Parity, SmallTables) {
  const BooleanFunction empty = materialize_parity(ParityDescriptor{2, 0});
  for (std::size_t x = 0; x < 4; ++x)
    EXPECT_EQ(empty.at(x), 1);

  const std::vector<int> first{0};
  const BooleanFunction f1 = materialize_parity(ParityDescriptor::from_subset(2, first));
  const std::vector<int> point{-1, 1};
  EXPECT_EQ(f1(Point::from_signs(point)), -1);

  const std::vector<int> both{0, 1};
  const BooleanFunction f12 = materialize_parity(ParityDescriptor::from_subset(2, both));
  EXPECT_EQ(std::vector<int>(f12.table().begin(), f12.table().end()),
            (std::vector<int>{1, -1, -1, 1}));
}

TEST(Parity, MatchesCoordinateProductOracle) {
  for (int n = 1; n <= 6; ++n)
    for (std::uint32_t s = 0; s < cube_size(n); ++s)
      for (std::uint32_t x = 0; x < cube_size(n); ++x)
        ASSERT_EQ(parity_value(s, x), oracle::parity(n, s, x));
}

TEST(WeightedInner, SelfAndCrossProducts) {
  const std::vector<int> c0{0}, c1{1};
  const BooleanFunction f1 = materialize_parity(ParityDescriptor::from_subset(2, c0));
  const BooleanFunction f2 = materialize_parity(ParityDescriptor::from_subset(2, c1));
  const Distribution u = Distribution::uniform(2);
  EXPECT_DOUBLE_EQ(weighted_inner(f1, f1.to_real(), u), 1.0);
  EXPECT_DOUBLE_EQ(weighted_inner(f1, f2.to_real(), u), 0.0);
  EXPECT_THROW(weighted_inner(f1, std::vector<double>(3, 0.0), u), DimensionError);
  EXPECT_THROW(weighted_inner(f1, f1.to_real(), Distribution::uniform(3)), DimensionError);
}

TEST(WeightedInner, MatchesNaiveSum) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0), w(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 6;
    std::vector<double> g(cube_size(n)), weights(cube_size(n));
    for (auto& v : g)
      v = u(rng);
    for (auto& v : weights)
      v = w(rng) + 0.01;
    const Distribution d = Distribution::normalized(n, weights);
    const std::uint32_t subset = static_cast<std::uint32_t>(rng() & (cube_size(n) - 1));
    const BooleanFunction f = materialize_parity(ParityDescriptor{n, subset});
    double naive = 0.0;
    for (std::uint32_t x = 0; x < cube_size(n); ++x)
      naive += oracle::parity(n, subset, x) * g[x] * d[x];
    EXPECT_NEAR(weighted_inner(f, g, d), naive, 1e-12);
  }
}

TEST(WeightedInner, SelfCorrelationIsOneUnderAnyDistribution) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> w(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 6;
    std::vector<double> weights(cube_size(n));
    for (auto& v : weights)
      v = w(rng);
    const Distribution d = Distribution::normalized(n, weights);
    const BooleanFunction f =
        BooleanFunction::from_fn(n, [&](Point) { return (rng() & 1u) ? 1 : -1; });
    EXPECT_NEAR(weighted_inner(f, f.to_real(), d), 1.0, 1e-12);
  }
}

TEST(ParitySet, OrthonormalUnderUniform) {
  for (int n = 1; n <= 6; ++n) {
    const Distribution u = Distribution::uniform(n);
    for (std::uint32_t i = 0; i < cube_size(n); ++i) {
      const BooleanFunction fi = materialize_parity(ParityDescriptor{n, i});
      for (std::uint32_t j = 0; j < cube_size(n); ++j) {
        const RealTable fj = materialize_parity(ParityDescriptor{n, j}).to_real();
        ASSERT_DOUBLE_EQ(weighted_inner(fi, fj, u), i == j ? 1.0 : 0.0);
      }
    }
  }
}

TEST(ParitySet, ParsevalOnRandomTables) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 6;
    const Distribution d = Distribution::uniform(n);
    std::vector<double> g(cube_size(n));
    double energy = 0.0;
    for (auto& v : g) {
      v = u(rng);
      energy += v * v;
    }
    energy /= static_cast<double>(g.size());
    double spectrum = 0.0;
    for (std::uint32_t s = 0; s < cube_size(n); ++s) {
      const double c = weighted_inner(materialize_parity(ParityDescriptor{n, s}), g, d);
      spectrum += c * c;
    }
    EXPECT_NEAR(spectrum, energy, 1e-9);
  }
}

TEST(LogicFormula, InnerProductOfOrsSmallCases) {
  const LogicFormula f = inner_product_or_formula(2);
  const std::vector<int> ones{1, 1}, z{-1, 1}, x{-1, 1};
  for (std::uint32_t xb = 0; xb < 4; ++xb) {
    Assignment a{{"x", Point{2, xb}}, {"z", Point::from_signs(ones)}};
    EXPECT_EQ(f.eval(a), 1);
  }
  Assignment a{{"x", Point::from_signs(x)}, {"z", Point::from_signs(z)}};
  EXPECT_EQ(eval_formula(f, a), -1);
}

TEST(LogicFormula, InnerProductOfOrsIsParityOfZNegatives) {
  for (int n = 1; n <= 6; ++n) {
    const LogicFormula f = inner_product_or_formula(n);
    for (std::uint32_t z = 0; z < cube_size(n); ++z) {
      const BooleanFunction parity = materialize_parity(ParityDescriptor{n, z});
      for (std::uint32_t x = 0; x < cube_size(n); ++x) {
        Assignment a{{"x", Point{n, x}}, {"z", Point{n, z}}};
        ASSERT_EQ(f.eval(a), parity.at(x));
      }
    }
  }
}

TEST(LogicFormula, UnboundCoordinatesRaise) {
  const LogicFormula f = inner_product_or_formula(3);
  Assignment missing_group{{"x", Point{3, 0}}};
  EXPECT_THROW(f.eval(missing_group), EvalError);
  Assignment short_point{{"x", Point{3, 0}}, {"z", Point{2, 0}}};
  EXPECT_THROW(f.eval(short_point), EvalError);
}

TEST(LogicFormula, EmptyConnectives) {
  const Assignment a{{"x", Point{1, 0}}};
  EXPECT_EQ(LogicFormula::all_of({}).eval(a), 1);
  EXPECT_EQ(LogicFormula::any_of({}).eval(a), -1);
  EXPECT_EQ(LogicFormula::negation(LogicFormula::literal("x", 0)).eval(a), -1);
}

TEST(LogicFormula, AndOrMatchesDirectEvaluation) {
  const LogicFormula f = and_or_formula(2, 3);
  for (std::uint32_t x = 0; x < 64; ++x) {
    const Point p{6, x};
    int expected = 1;
    for (int i = 0; i < 2; ++i) {
      bool any = false;
      for (int j = 0; j < 3; ++j)
        any = any || p[i * 3 + j] == 1;
      if (!any)
        expected = -1;
    }
    ASSERT_EQ(f.eval({{"x", p}}), expected);
  }
}
