#include <gtest/gtest.h>

#include "lureforge/catalog.hpp"
#include "lureforge/projsynth.hpp"
#include "support.hpp"

using namespace lureforge;

namespace {

struct Instance {
  iqclift::AugmentedSystem aug;
  certify::RateCertificate cert;
};

Instance certified(const sssys::ReducedLTI& sys, int ell, bool pointwise_only = false) {
  Instance in;
  in.aug = iqclift::augment(catalog::prepare(sys).canon, iqclift::build_filter(ell));
  certify::Settings settings;
  settings.pointwise_only = pointwise_only;
  in.cert = certify::bisect_rate(in.aug, 1.0, 10.0, {}, sdp::InteriorPointSolver{}, settings).cert;
  return in;
}

// The delayed-gradient example certified once at a fixed rate above its frontier.
const Instance& paper_instance() {
  static const Instance in = [] {
    Instance out;
    out.aug = iqclift::augment(catalog::prepare(catalog::paper::system(2)).canon,
                               iqclift::build_filter(catalog::paper::ell));
    const auto fr = certify::solve_feasibility(certify::assemble_lmi(out.aug, 0.85, 1.0, 10.0));
    EXPECT_EQ(fr.status, certify::Feasibility::Feasible);
    out.cert = fr.cert;
    return out;
  }();
  return in;
}

projection::ConstraintSet random_set(int kind, int d, std::mt19937_64& rng) {
  switch (kind) {
    case 0:
      return projection::Box{-0.5 * Vector::Ones(d), lftest::uniform_vector(d, -0.2, 0.5, rng)};
    case 1:
      return projection::Ball{lftest::uniform_vector(d, -1, 1, rng), 0.8};
    default:
      return projection::Ellipsoid{lftest::random_spd(d, 0.5, 3.0, rng), 1.0};
  }
}

}  // namespace

TEST(Projsynth, SchurSplitMatchesInverse) {
  // Rows {0} ∪ [r, N) of P; s is the reciprocal of the leading entry of that block's inverse.
  std::mt19937_64 rng(1);
  const Matrix P = lftest::random_spd(6, 0.5, 4.0, rng);
  const int r = 2;
  const auto sp = projsynth::schur_split(P, r);
  std::vector<int> idx = {0, 2, 3, 4, 5};
  Matrix sub(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) sub(i, j) = P(idx[i], idx[j]);
  EXPECT_NEAR(sp.s, 1.0 / sub.inverse()(0, 0), 1e-10);
  const Vector g = P.bottomRightCorner(4, 4).ldlt().solve(P.block(0, r, 1, 4).transpose());
  EXPECT_LE((sp.gain - g).norm(), 1e-10);
}

TEST(Projsynth, RejectsMismatchedCertificate) {
  const auto in = certified(catalog::gradient_descent(2.0 / 11.0), 0);
  const auto other = iqclift::augment(catalog::prepare(catalog::nesterov(1, 10)).canon,
                                      iqclift::build_filter(1));
  try {
    projsynth::synthesize(other, in.cert, projection::Unconstrained{});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PartitionMismatch);
  }
}

TEST(Projsynth, UnconstrainedSetReproducesUnconstrainedRun) {
  std::mt19937_64 rng(3);
  const auto in = certified(catalog::nesterov(1.0, 10.0, 2), 1);
  const auto alg = projsynth::synthesize(in.aug, in.cert, projection::Unconstrained{});
  const auto f = oracles::random_quadratic(2, 1, 10, rng);
  const Matrix x0 = projsynth::lift_state(in.aug, lftest::uniform_matrix(in.aug.canon.n, 2, 0, 1, rng));
  const auto tr = projsynth::run(alg, f, x0, 40);
  Matrix x = x0;
  for (int k = 0; k <= 40; ++k) {
    EXPECT_LE((tr.states[k] - x).norm(), 1e-12);
    x = in.aug.A * x + in.aug.B * f.gradient(x.row(in.aug.output_row()).transpose()).transpose();
  }
}

TEST(Projsynth, LiftedStepAgreesWithCanonicalStep) {
  std::mt19937_64 rng(4);
  const auto& in = paper_instance();
  Matrix W(2, 2);
  W << 1.0, -0.5, -0.5, 2.0;
  const auto alg = projsynth::synthesize(in.aug, in.cert, projection::Ellipsoid{W, 1.0});
  const auto f = oracles::quadratic(catalog::paper::F(), catalog::paper::p());
  Matrix x = projsynth::lift_state(in.aug, lftest::uniform_matrix(4, 2, 0, 1, rng));
  for (int k = 0; k < 30; ++k) {
    const Matrix canon_next = projsynth::step(alg, x.topRows(4), f);
    x = projsynth::lifted_step(alg, x, f);
    EXPECT_LE((x.topRows(4) - canon_next).norm(), 1e-12);
  }
}

TEST(Projsynth, PaperFixedPointIsOptimal) {
  const auto& in = paper_instance();
  const auto alg = projsynth::synthesize(in.aug, in.cert, catalog::paper::ellipse());
  const auto f = oracles::quadratic(catalog::paper::F(), catalog::paper::p());
  EXPECT_GT(alg.s, 0.0);
  const Matrix x0 = projsynth::lift_state(in.aug, Matrix::Constant(4, 2, 0.5));
  const Matrix xs = projsynth::converge(alg, f, x0);
  const auto rep = projsynth::check_fixed_point(alg, f, xs);
  EXPECT_TRUE(rep.ok);
  EXPECT_LE(rep.kkt_residual, 1e-6);
  EXPECT_GT(rep.gamma, 0.0);
  EXPECT_LE(rep.stack_residual, 1e-9);
  EXPECT_LE(rep.state_residual, 1e-9);
  // The unconstrained minimizer lies outside the ellipse, so the constraint is active.
  const Vector yu = *f.minimizer;
  EXPECT_GT(yu.dot(catalog::paper::ellipse().W * yu), 10.0);
  EXPECT_NEAR(rep.y_star.dot(catalog::paper::ellipse().W * rep.y_star), 10.0, 1e-8);
}

// Without a filter the projected step is an exact P-norm projection of the certified
// unconstrained step, so the per-step ratio is bounded by rho.
TEST(Projsynth, RatePreservedWithoutLifting) {
  std::mt19937_64 rng(12);
  for (double alpha : {2.0 / 11.0, 0.1}) {
    const auto in = certified(catalog::gradient_descent(alpha, 2), 0);
    for (int t = 0; t < 9; ++t) {
      const auto f = oracles::random_quadratic(2, 1, 10, rng);
      const auto alg = projsynth::synthesize(in.aug, in.cert, random_set(t % 3, 2, rng));
      const Matrix x0 =
          projsynth::lift_state(in.aug, lftest::uniform_matrix(in.aug.canon.n, 2, -3, 3, rng));
      const Matrix xs = projsynth::converge(alg, f, x0);
      const auto tr = projsynth::run(alg, f, x0, 120);
      EXPECT_LE(projsynth::worst_contraction(in.cert.P, tr.states, xs, 0),
                in.cert.rho * (1 + 1e-8));
    }
  }
}

TEST(Projsynth, FixedPointOptimalOnRandomInstances) {
  std::mt19937_64 rng(12);
  const std::vector<Instance> instances = {certified(catalog::gradient_descent(2.0 / 11.0, 2), 0),
                                           certified(catalog::nesterov(1.0, 10.0, 2), 1),
                                           certified(catalog::triple_momentum(1.0, 10.0, 2), 1)};
  for (const auto& in : instances) {
    for (int t = 0; t < 6; ++t) {
      const auto f = oracles::random_quadratic(2, 1, 10, rng);
      const auto alg = projsynth::synthesize(in.aug, in.cert, random_set(t % 3, 2, rng));
      const Matrix x0 =
          projsynth::lift_state(in.aug, lftest::uniform_matrix(in.aug.canon.n, 2, -3, 3, rng));
      const Matrix xs = projsynth::converge(alg, f, x0);
      const auto rep = projsynth::check_fixed_point(alg, f, xs);
      EXPECT_LE(rep.kkt_residual, 1e-6);
      EXPECT_GT(rep.gamma, 0.0);
    }
  }
}

// With pointwise multipliers only, an unconstrained run from a zero filter contracts at every
// step once the filter holds real history.
TEST(Projsynth, PointwiseCertificateContractsUnconstrained) {
  std::mt19937_64 rng(5);
  for (const auto& [sys, ell] : {std::pair{catalog::nesterov(1.0, 10.0, 2), 1},
                                 std::pair{catalog::heavy_ball(1.0, 10.0, 2), 2}}) {
    const auto in = certified(sys, ell, true);
    EXPECT_EQ(in.cert.Qt.norm(), 0.0);
    const auto alg = projsynth::synthesize(in.aug, in.cert, projection::Unconstrained{});
    for (int t = 0; t < 6; ++t) {
      const auto f = oracles::random_quadratic(2, 1, 10, rng);
      const Matrix x0 =
          projsynth::lift_state(in.aug, lftest::uniform_matrix(in.aug.canon.n, 2, -3, 3, rng));
      const Matrix xs =
          certify::augmented_equilibrium(in.aug, *f.minimizer, f.gradient(*f.minimizer));
      const auto tr = projsynth::run(alg, f, x0, 120);
      EXPECT_LE(projsynth::worst_contraction(in.cert.P, tr.states, xs, ell),
                in.cert.rho * (1 + 1e-8));
    }
  }
}

TEST(Projsynth, PointwiseCertificateIsNoFasterThanFull) {
  const auto full = certified(catalog::nesterov(1.0, 10.0, 2), 1);
  const auto pointwise = certified(catalog::nesterov(1.0, 10.0, 2), 1, true);
  EXPECT_GE(pointwise.cert.rho, full.cert.rho - 1e-3);
}

TEST(Projsynth, ZeroHorizonRun) {
  const auto in = certified(catalog::gradient_descent(0.1), 0);
  const auto alg = projsynth::synthesize(in.aug, in.cert, projection::Unconstrained{});
  std::mt19937_64 rng(1);
  const auto f = oracles::random_quadratic(1, 1, 10, rng);
  const auto tr = projsynth::run(alg, f, Matrix::Ones(1, 1), 0);
  EXPECT_EQ(tr.states.size(), 1u);
  EXPECT_EQ(tr.proj_residuals.size(), 1u);
}

TEST(Projsynth, GammaIsOneForRelativeDegreeOne) {
  const auto in = certified(catalog::gradient_descent(0.1), 0);
  const auto alg = projsynth::synthesize(in.aug, in.cert, projection::Unconstrained{});
  EXPECT_DOUBLE_EQ(projsynth::gamma_factor(alg), 1.0);
}
