#include <gtest/gtest.h>

#include "lureforge/catalog.hpp"
#include "lureforge/pipeline.hpp"
#include "support.hpp"

using namespace lureforge;

TEST(Canonical, PaperExample) {
  const auto prep = catalog::prepare(catalog::paper::system(2));
  EXPECT_TRUE(prep.was_canonical);
  const auto& cs = prep.canon;
  EXPECT_EQ(cs.r, 2);
  EXPECT_EQ(cs.n, 4);
  EXPECT_NEAR(cs.g, -0.1519, 1e-12);
  const auto rep = canonical::structural_checks(cs);
  EXPECT_TRUE(rep.ok);
  EXPECT_LE(rep.lemma1_residual, 1e-8);
  EXPECT_EQ(rep.k2_rank, 2);
}

TEST(Canonical, PrintedPaperMatrixFailsLemma1) {
  // Without the integrator restored, the rounded entries leave a visible residual.
  const auto prep = catalog::prepare(catalog::paper::system(2, false));
  const auto rep = canonical::structural_checks(prep.canon);
  EXPECT_GT(rep.lemma1_residual, 1e-6);
  EXPECT_FALSE(rep.ok);
}

TEST(Canonical, GradientDescentIsRelativeDegreeOne) {
  const auto c = pipeline::canonicalize_system(catalog::gradient_descent(2.0 / 11.0, 2), 1, 10);
  EXPECT_EQ(c.prep.canon.r, 1);
  EXPECT_EQ(c.prep.canon.n, 1);
  EXPECT_NEAR(c.prep.canon.g, -2.0 / 11.0, 1e-15);
  EXPECT_TRUE(c.report.ok);
}

TEST(Canonical, CatalogStructuralIdentities) {
  for (const auto& e : catalog::standard()) {
    for (int d : {1, 3}) {
      auto sys = e.sys;
      sys.d = d;
      const auto c = pipeline::canonicalize_system(sys, 1.0, 10.0, 5);
      EXPECT_LE(c.report.lemma1_residual, 1e-8) << e.name;
      EXPECT_LT(c.report.g, 0.0) << e.name;
      EXPECT_LE(c.report.io_equivalence_error, 1e-9) << e.name;
      EXPECT_TRUE(c.report.ok) << e.name;
      EXPECT_TRUE(canonical::is_canonical(c.prep.canon.lti(), c.prep.canon.r)) << e.name;
    }
  }
}

TEST(Canonical, RandomSimilarityOfCatalogSystem) {
  // A scrambled realization must land on a canonical form with identical input/output map.
  std::mt19937_64 rng(9);
  const auto base = catalog::triple_momentum(1.0, 10.0, 2);
  for (int t = 0; t < 10; ++t) {
    const Matrix T = lftest::uniform_matrix(2, 2, -1, 1, rng) + 3.0 * Matrix::Identity(2, 2);
    const auto scrambled = sssys::similarity(base, T);
    const auto c = pipeline::canonicalize_system(scrambled, 1.0, 10.0, t);
    EXPECT_TRUE(c.report.ok);
    EXPECT_LE(c.report.io_equivalence_error, 1e-9);
  }
}

TEST(Canonical, FixedPointIsEquilibrium) {
  const auto prep = catalog::prepare(catalog::paper::system(2));
  Vector y(2);
  y << 0.3, -1.2;
  const Matrix x = canonical::fixed_point(prep.canon, y);
  EXPECT_LE((prep.canon.a() * x - x).norm(), 1e-10);
  EXPECT_LE((x.row(prep.canon.r - 1).transpose() - y).norm(), 1e-14);
  EXPECT_LE((x.row(0).transpose() - y).norm(), 1e-14);
}

TEST(Canonical, RankDecisionAmbiguity) {
  Matrix M = Matrix::Identity(3, 3);
  M(2, 2) = 1e-9;
  EXPECT_THROW(canonical::decide_rank(M), Error);
  M(2, 2) = 1e-13;
  EXPECT_EQ(canonical::decide_rank(M), 2);
  M(2, 2) = 1e-3;
  EXPECT_EQ(canonical::decide_rank(M), 3);
}

TEST(Canonical, FromBlocksRoundTrip) {
  const auto cs = catalog::prepare(catalog::paper::system(2)).canon;
  const auto back = canonical::from_blocks(cs.a(), cs.g, cs.r, cs.d);
  EXPECT_EQ(back.a(), cs.a());
  EXPECT_EQ(back.b(), cs.b());
  EXPECT_EQ(back.c(), cs.c());
}
