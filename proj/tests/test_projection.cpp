#include <gtest/gtest.h>

#include "lureforge/projection.hpp"
#include "support.hpp"

using namespace lureforge;
using projection::ConstraintSet;

namespace {

ConstraintSet random_set(int kind, int d, std::mt19937_64& rng) {
  switch (kind) {
    case 0: {
      const Vector lo = lftest::uniform_vector(d, -2, 0, rng);
      return projection::Box{lo, lo + lftest::uniform_vector(d, 0.1, 3, rng)};
    }
    case 1:
      return projection::Halfspace{lftest::uniform_vector(d, -1, 1, rng), 0.3};
    case 2:
      return projection::Ball{lftest::uniform_vector(d, -1, 1, rng), 1.5};
    case 3:
      return projection::Ellipsoid{lftest::random_spd(d, 0.2, 5.0, rng), 2.0};
    default:
      return projection::Polyhedron{lftest::uniform_matrix(2 * d + 1, d, -1, 1, rng),
                                    lftest::uniform_vector(2 * d + 1, 0.5, 1.5, rng)};
  }
}

}  // namespace

TEST(Projection, NonexpansiveAndIdempotent) {
  std::mt19937_64 rng(77);
  for (int kind = 0; kind < 5; ++kind) {
    for (int d : {2, 4}) {
      const ConstraintSet set = random_set(kind, d, rng);
      for (int pair = 0; pair < 1000; ++pair) {
        const Vector a = lftest::uniform_vector(d, -6, 6, rng);
        const Vector b = lftest::uniform_vector(d, -6, 6, rng);
        const Vector pa = projection::project_euclidean(set, a);
        const Vector pb = projection::project_euclidean(set, b);
        ASSERT_LE((pa - pb).norm(), (a - b).norm() * (1 + 1e-12) + 1e-12)
            << projection::kind_name(set);
        ASSERT_LE((projection::project_euclidean(set, pa) - pa).norm(), 1e-10)
            << projection::kind_name(set);
        ASSERT_TRUE(projection::contains(set, pa, 1e-9)) << projection::kind_name(set);
      }
    }
  }
}

TEST(Projection, VariationalInequality) {
  // ⟨v − Π(v), w − Π(v)⟩ ≤ 0 for every w in the set.
  std::mt19937_64 rng(5);
  for (int kind = 0; kind < 5; ++kind) {
    const ConstraintSet set = random_set(kind, 3, rng);
    for (int t = 0; t < 200; ++t) {
      const Vector v = lftest::uniform_vector(3, -6, 6, rng);
      const Vector p = projection::project_euclidean(set, v);
      const Vector w = projection::project_euclidean(set, lftest::uniform_vector(3, -6, 6, rng));
      EXPECT_LE((v - p).dot(w - p), 1e-8 * (1 + v.norm() * w.norm())) << projection::kind_name(set);
    }
  }
}

TEST(Projection, EllipsoidMatchesBruteForce) {
  std::mt19937_64 rng(11);
  Matrix W(2, 2);
  W << 1.0, -0.5, -0.5, 2.0;
  for (int t = 0; t < 100; ++t) {
    const projection::Ellipsoid e =
        t % 2 == 0 ? projection::Ellipsoid{W, 10.0}
                   : projection::Ellipsoid{lftest::random_spd(2, 0.05, 20.0, rng), 1.0};
    Vector v;
    do v = lftest::uniform_vector(2, -15, 15, rng);
    while (v.dot(e.W * v) <= e.c);
    const Vector p = projection::project_euclidean(e, v);
    EXPECT_LE((p - lftest::brute_force_ellipse(e, v)).norm(), 1e-6);
  }
}

TEST(Projection, PolyhedronMatchesBox) {
  std::mt19937_64 rng(2);
  const int d = 3;
  const Vector lo = -Vector::Ones(d), hi = 2 * Vector::Ones(d);
  Matrix A(2 * d, d);
  A << Matrix::Identity(d, d), -Matrix::Identity(d, d);
  Vector b(2 * d);
  b << hi, -lo;
  for (int t = 0; t < 200; ++t) {
    const Vector v = lftest::uniform_vector(d, -5, 5, rng);
    EXPECT_LE((projection::project_euclidean(projection::Polyhedron{A, b}, v) -
               projection::project_euclidean(projection::Box{lo, hi}, v))
                  .norm(),
              1e-10);
  }
}

TEST(Projection, InteriorPointsAreFixed) {
  Matrix W(2, 2);
  W << 1.0, -0.5, -0.5, 2.0;
  const Vector v{{0.5, 0.5}};
  EXPECT_EQ(projection::project_euclidean(projection::Ellipsoid{W, 10.0}, v), v);
  EXPECT_EQ(projection::project_euclidean(projection::Unconstrained{}, v), v);
}

TEST(Projection, DegenerateSets) {
  const Vector v{{3.0, -4.0}};
  EXPECT_LE(projection::project_euclidean(projection::Ball{Vector::Zero(2), 0.0}, v).norm(), 0.0);
  EXPECT_LE(
      projection::project_euclidean(projection::Ellipsoid{Matrix::Identity(2, 2), 0.0}, v).norm(),
      0.0);
  const Vector p = projection::project_euclidean(projection::Ball{Vector::Zero(2), 1.0}, v);
  EXPECT_NEAR(p(0), 0.6, 1e-15);
  EXPECT_NEAR(p(1), -0.8, 1e-15);
}

TEST(Projection, Validation) {
  EXPECT_THROW(projection::validate(projection::Box{Vector::Ones(2), Vector::Zero(2)}), Error);
  EXPECT_THROW(projection::validate(projection::Ball{Vector::Zero(2), -1.0}), Error);
  Matrix W(2, 2);
  W << 1, 0, 0, -1;
  EXPECT_THROW(projection::validate(projection::Ellipsoid{W, 1.0}), Error);
  EXPECT_THROW(projection::validate(projection::Halfspace{Vector::Zero(2), 1.0}), Error);
  EXPECT_THROW(projection::validate(projection::Ball{Vector::Zero(3), 1.0}, 2), Error);
  Matrix A(2, 1);
  A << 1, -1;
  const Vector b{{-1.0, -1.0}};  // y ≤ −1 and y ≥ 1
  try {
    projection::project_euclidean(projection::Polyhedron{A, b}, Vector::Zero(1));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptySet);
  }
}
