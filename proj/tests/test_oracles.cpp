#include <gtest/gtest.h>

#include "lureforge/oracles.hpp"
#include "support.hpp"

using namespace lureforge;

namespace {

Vector fd_gradient(const oracles::ObjectiveOracle& f, const Vector& y, double h = 1e-6) {
  Vector g(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    Vector a = y, b = y;
    a(i) += h;
    b(i) -= h;
    g(i) = (f.value(a) - f.value(b)) / (2 * h);
  }
  return g;
}

}  // namespace

TEST(Oracles, QuadraticMatchesFiniteDifferences) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = oracles::random_quadratic(3, 1.0, 10.0, rng);
    const Vector y = lftest::uniform_vector(3, -2, 2, rng);
    EXPECT_LE((f.gradient(y) - fd_gradient(f, y)).norm(), 1e-6);
    EXPECT_NEAR(f.m, 1.0, 1e-12);
    EXPECT_NEAR(f.L, 10.0, 1e-12);
    EXPECT_LE(f.gradient(*f.minimizer).norm(), 1e-10);
  }
}

TEST(Oracles, LogSumExpMatchesFiniteDifferences) {
  Matrix A(3, 2);
  A << 1, 2, -1, 0.5, 0, -3;
  Vector b(3);
  b << 0.1, -0.2, 0.3;
  const auto f = oracles::regularized_logsumexp(A, b, 0.5);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector y = lftest::uniform_vector(2, -2, 2, rng);
    EXPECT_LE((f.gradient(y) - fd_gradient(f, y)).norm(), 1e-6);
  }
  EXPECT_LE(f.gradient(*f.minimizer).norm(), 1e-9);
  EXPECT_TRUE(oracles::membership_check(f, f.m, f.L, 500));
}

TEST(Oracles, MembershipDetectsWrongSector) {
  Matrix F(2, 2);
  F << 9.88, -1.0, -1.0, 1.117;
  Vector p(2);
  p << 1.0, 5.0;
  const auto f = oracles::quadratic(F, p);
  EXPECT_TRUE(oracles::membership_check(f, 1.0, 10.0, 1000));
  EXPECT_FALSE(oracles::membership_check(f, 1.0, 5.0, 1000));
  EXPECT_FALSE(oracles::membership_check(f, 2.0, 10.0, 1000));
}

TEST(Oracles, RejectsIndefiniteQuadratic) {
  Matrix F(2, 2);
  F << 1.0, 0.0, 0.0, -1.0;
  EXPECT_THROW(oracles::quadratic(F, Vector::Zero(2)), Error);
}
