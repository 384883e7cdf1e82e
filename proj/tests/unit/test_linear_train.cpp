#include <cmath>
#include <cstdlib>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "hardness/linear_train.hpp"
#include "hardness/variance.hpp"
#include "oracles.hpp"

using namespace hardness;

namespace {

Member constant_member(int n) {
  const std::size_t size = cube_size(n);
  return Member{std::vector<std::int8_t>(size, 1),
                std::vector<double>(size, 1.0 / static_cast<double>(size))};
}

std::vector<double> random_ball_point(std::size_t dim, double radius, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(dim);
  for (double& v : w)
    v = g(rng);
  const double scale = radius * u(rng) / norm2(w);
  for (double& v : w)
    v *= scale;
  return w;
}

} // namespace

TEST(Embedding, RejectsEntriesOutsideUnitBox) {
  DenseMatrix m(2, 2);
  m(0, 0) = 1.5;
  EXPECT_THROW(Embedding{m}, NormError);
  EXPECT_THROW(Embedding{DenseMatrix(0, 3)}, ParamError);
  const Embedding e = Embedding::coordinate(LabeledFamily::cube(3), true);
  EXPECT_EQ(e.dimension(), 4u);
  EXPECT_NEAR(e.max_row_norm(), 2.0, 1e-15);
}

TEST(TrainLinear, ConstantMemberWithBiasReachesZeroHinge) {
  const auto cube = LabeledFamily::cube(3);
  const Embedding psi = Embedding::coordinate(cube, true);
  TrainConfig cfg;
  cfg.radius = 2.0;
  const TrainResult r = train_linear(constant_member(3), psi, LossSpec::hinge(), cfg);
  EXPECT_LE(r.loss_achieved, 1e-6);
}

TEST(TrainLinear, ZeroRadiusStaysAtLossAtZero) {
  const LabeledFamily a = random_family(3, 4, 2);
  const Embedding psi = Embedding::random_uniform(8, 5, 1);
  TrainConfig cfg;
  cfg.radius = 0.0;
  for (const Member& m : a.members()) {
    EXPECT_DOUBLE_EQ(train_linear(m, psi, LossSpec::hinge(), cfg).loss_achieved, 1.0);
    EXPECT_DOUBLE_EQ(train_linear(m, psi, LossSpec::half_square(), cfg).loss_achieved, 0.5);
  }
}

TEST(TrainLinear, HighDegreeParityIsInvisibleToCoordinates) {
  const LabeledFamily a = build_parity_family(4);
  const Embedding psi = Embedding::coordinate(a.support(), true);
  TrainConfig cfg;
  cfg.radius = 5.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::popcount(static_cast<unsigned>(i)) < 2)
      continue;
    EXPECT_GE(train_linear(a.member(i), psi, LossSpec::hinge(), cfg).loss_achieved, 1.0 - 1e-9);
  }
}

TEST(TrainLinear, RejectsNonConvexLossAndBadConfig) {
  const Member m = constant_member(2);
  const Embedding psi = Embedding::coordinate(LabeledFamily::cube(2));
  EXPECT_THROW(train_linear(m, psi, LossSpec::zero_one(), {}), LossContractError);
  TrainConfig bad;
  bad.step_size = 0.0;
  EXPECT_THROW(train_linear(m, psi, LossSpec::hinge(), bad), ParamError);
  const Embedding wrong = Embedding::coordinate(LabeledFamily::cube(3));
  EXPECT_THROW(train_linear(m, wrong, LossSpec::hinge(), {}), DimensionError);
}

TEST(Gradient, ClosedFormAtOrigin) {
  // At w = 0 both hinge and half_square give -sum_x D(x) f(x) Psi(x).
  const LabeledFamily a = random_family(3, 5, 9);
  const Embedding psi = Embedding::random_uniform(8, 6, 4);
  const std::vector<double> zero(6, 0.0);
  for (const Member& m : a.members()) {
    std::vector<double> expect(6, 0.0);
    for (std::size_t x = 0; x < 8; ++x)
      for (std::size_t k = 0; k < 6; ++k)
        expect[k] -= m.D[x] * m.f[x] * psi.matrix()(x, k);
    for (const LossSpec& loss : {LossSpec::hinge(), LossSpec::half_square()}) {
      const auto g = linear_population_gradient(m, psi, loss, zero);
      for (std::size_t k = 0; k < 6; ++k)
        EXPECT_NEAR(g[k], expect[k], 1e-15);
    }
  }
}

TEST(Gradient, ParityCoordinateNorms) {
  const LabeledFamily a = build_parity_family(4);
  const Embedding psi = Embedding::coordinate(a.support());
  const std::vector<double> zero(4, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double norm = norm2(linear_population_gradient(a.member(i), psi, LossSpec::hinge(), zero));
    EXPECT_NEAR(norm, std::popcount(static_cast<unsigned>(i)) == 1 ? 1.0 : 0.0, 1e-15);
  }
}

TEST(Gradient, HalfSquareMatchesCentralDifferences) {
  std::mt19937_64 rng(31);
  const LabeledFamily a = random_family(4, 6, 5);
  const Embedding psi = Embedding::random_uniform(16, 7, 8);
  for (const Member& m : a.members()) {
    const auto w = random_ball_point(7, 2.0, rng);
    EXPECT_LE(grad_check(m, psi, LossSpec::half_square(), w, 1e-5), 1e-6);
    const auto g = linear_population_gradient(m, psi, LossSpec::half_square(), w);
    for (std::size_t k = 0; k < 7; ++k) {
      const double numeric = oracle::central_difference(
          [&](const std::vector<double>& v) {
            return linear_population_loss(m, psi, LossSpec::half_square(), v);
          },
          w, k, 1e-5);
      EXPECT_NEAR(g[k], numeric, 1e-7);
    }
  }
}

TEST(Gradient, HingeMatchesCentralDifferencesAwayFromKinks) {
  std::mt19937_64 rng(3);
  const LabeledFamily a = random_family(3, 6, 15);
  const Embedding psi = Embedding::random_uniform(8, 4, 2);
  int checked = 0;
  for (const Member& m : a.members()) {
    const auto w = random_ball_point(4, 1.0, rng);
    // A step of h moves each margin by at most h * ||Psi(x)|| <= 2h.
    if (hinge_kink_distance(m, psi, w) < 1e-3)
      continue;
    EXPECT_LE(grad_check(m, psi, LossSpec::hinge(), w, 1e-5), 1e-8);
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST(FamilyProfile, MeanSquaredGradientIsBoundedByNVar) {
  // Each gradient coordinate is a correlation with a [-1,1]-valued probe, so averaging its
  // square over members is at most Var(A).
  for (int trial = 0; trial < 10; ++trial) {
    const LabeledFamily a = random_family(3, 2 + trial, 300 + trial);
    const Embedding psi = Embedding::random_uniform(8, 5, 40 + trial);
    const double var = variance_exact(a).value;
    TrainConfig cfg;
    cfg.steps = 50;
    const FamilyProfile p = family_profile(a, psi, LossSpec::hinge(), cfg, var);
    EXPECT_LE(p.mean_grad0_sq, 5.0 * var + 1e-12);
    EXPECT_LE(p.mean_grad0_norm, std::sqrt(5.0 * var) + 1e-12);
  }
}

TEST(FamilyProfile, ParityEnergyIsTight) {
  const LabeledFamily a = build_parity_family(4);
  const Embedding psi = Embedding::coordinate(a.support());
  TrainConfig cfg;
  cfg.steps = 10;
  const FamilyProfile p = family_profile(a, psi, LossSpec::hinge(), cfg, 1.0 / 16.0);
  EXPECT_NEAR(p.mean_grad0_sq, 4.0 / 16.0, 1e-15);
}

TEST(FamilyProfile, AchievedLossRespectsBoundAndConvexityChain) {
  for (int trial = 0; trial < 8; ++trial) {
    const LabeledFamily a = random_family(3, 3 + trial, 60 + trial);
    const Embedding psi = Embedding::random_sign(8, 4, 11 + trial);
    const double var = variance_exact(a).value;
    TrainConfig cfg;
    cfg.radius = 1.5;
    cfg.steps = 200;
    const FamilyProfile p = family_profile(a, psi, LossSpec::hinge(), cfg, var);
    EXPECT_GE(p.min, p.bound.value - 1e-12);
    EXPECT_GE(p.mean, 1.0 - cfg.radius * p.mean_grad0_norm - 1e-12);
    for (const MemberProfile& m : p.per_member)
      EXPECT_GE(m.loss_achieved, 1.0 - cfg.radius * m.grad0_norm - 1e-12);
  }
}

TEST(FamilyProfile, IndependentOfWorkerCount) {
  const LabeledFamily a = random_family(4, 12, 1);
  const Embedding psi = Embedding::random_uniform(16, 6, 3);
  TrainConfig cfg;
  cfg.steps = 60;
  ::setenv("HARDNESS_WORKERS", "1", 1);
  const FamilyProfile one = family_profile(a, psi, LossSpec::hinge(), cfg, 0.5);
  ::setenv("HARDNESS_WORKERS", "3", 1);
  const FamilyProfile three = family_profile(a, psi, LossSpec::hinge(), cfg, 0.5);
  ::unsetenv("HARDNESS_WORKERS");
  ASSERT_EQ(one.per_member.size(), three.per_member.size());
  for (std::size_t i = 0; i < one.per_member.size(); ++i) {
    EXPECT_EQ(one.per_member[i].loss_achieved, three.per_member[i].loss_achieved);
    EXPECT_EQ(one.per_member[i].grad0_norm, three.per_member[i].grad0_norm);
  }
  EXPECT_EQ(one.mean, three.mean);
}
