#include <gtest/gtest.h>

#include <random>

#include "savac/potential.hpp"
#include "test_util.hpp"

using namespace savac;

TEST(Potential, PointValues) {
  const PotentialParams p{1e-5, 1.0};
  EXPECT_DOUBLE_EQ(F(p, 0.0), 0.25 + 1e-5);
  EXPECT_DOUBLE_EQ(Fp(p, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(Fpp(p, 0.0), -1.0);
  for (double x : {-1.0, 1.0}) {
    EXPECT_DOUBLE_EQ(F(p, x), 1e-5);
    EXPECT_DOUBLE_EQ(Fp(p, x), 0.0);
  }
}

TEST(Potential, DerivativesMatchFiniteDifferences) {
  const PotentialParams p{1e-5, 0.04};
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const double d = 1e-6;
  for (int k = 0; k < 20; ++k) {
    const double x = u(rng);
    EXPECT_NEAR(Fp(p, x), (F(p, x + d) - F(p, x - d)) / (2 * d), 1e-7);
    EXPECT_NEAR(Fpp(p, x), (Fp(p, x + d) - Fp(p, x - d)) / (2 * d), 1e-7);
  }
}

TEST(Potential, ParamsValidation) {
  EXPECT_THROW((PotentialParams{0.0, 1.0}.validate()), std::invalid_argument);
  EXPECT_THROW((PotentialParams{1e-5, 0.0}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((PotentialParams{1e-5, 0.04}.validate()));
}

TEST(Potential, DiscreteEnergyOfConstants) {
  const Mesh mesh(4.0, 4.0, 8, 8);
  const auto ops = assemble(mesh);
  const PotentialParams p{1e-5, 1.0};
  const std::size_t n = ops.node_count();
  EXPECT_NEAR(discrete_energy(p, ops, Vector(n, 0.0)), 4.00016, 1e-12);
  EXPECT_NEAR(discrete_energy(p, ops, Vector(n, 1.0)), 16e-5, 1e-15);
  EXPECT_NEAR(total_energy(p, ops, Vector(n, 1.0)), 16e-5, 1e-15);
  EXPECT_NEAR(total_energy(p, ops, Vector(n, 0.0)), 0.25001 * 16.0, 1e-12);
  const PotentialParams q{1e-5, 0.04};
  EXPECT_NEAR(discrete_energy(q, ops, Vector(n, 1.0)), 16e-5 / 0.04, 1e-14);
  EXPECT_THROW(discrete_energy(p, ops, Vector(3)), std::invalid_argument);
}

TEST(Potential, DiscreteEnergyLowerBound) {
  const Mesh mesh(4.0, 4.0, 6, 6);
  const auto ops = assemble(mesh);
  const PotentialParams p{1e-5, 0.04};
  std::mt19937_64 rng(9);
  for (int k = 0; k < 20; ++k) {
    const auto phi = test::random_vector(ops.node_count(), rng, -1.5, 1.5);
    EXPECT_GE(discrete_energy(p, ops, phi), p.gamma * 16.0 / p.epsilon);
    const double g = norm_grad(ops, phi);
    EXPECT_NEAR(total_energy(p, ops, phi), 0.5 * p.epsilon * g * g + discrete_energy(p, ops, phi),
                1e-10);
  }
}
