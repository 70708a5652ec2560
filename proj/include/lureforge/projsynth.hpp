#pragma once

#include <optional>
#include <vector>

#include "lureforge/canonical.hpp"
#include "lureforge/certify.hpp"
#include "lureforge/core.hpp"
#include "lureforge/iqclift.hpp"
#include "lureforge/oracles.hpp"
#include "lureforge/projection.hpp"

namespace lureforge::projsynth {

// Projected algorithm in the Lyapunov-induced norm. With P partitioned along the augmented
// state as (1, r, r+) = ({0}, [1, r), [r, N)):
//   s = P₁₁ − P₁₊ P₊₊⁻¹ P₁₊ᵀ,   G = P₊₊⁻¹ P₁₊ᵀ,   χ = first n − r rows of G.
// Each step projects the leading output and feeds the residual Δ = y_proj − y_half back
// through −χΔ (−GΔ on the full augmented state).
struct ProjectedAlgorithm {
  iqclift::AugmentedSystem aug;
  certify::RateCertificate cert;
  projection::ConstraintSet set;
  double s = 0.0;
  Vector chi;          // n − r entries
  Vector filter_gain;  // 2ℓ entries, the filter-state part of G
  Vector gain;         // G, N − r entries

  const canonical::CanonicalSystem& canon() const { return aug.canon; }
  double rho() const { return cert.rho; }
};

// Schur complement and gain from P and the partition, by direct block inversion.
struct SchurSplit {
  double s = 0.0;
  Vector gain;
};

inline SchurSplit schur_split(const Matrix& P, int r) {
  const auto N = P.rows();
  detail::require(P.cols() == N && r >= 1 && r <= N, ErrorCode::PartitionMismatch,
                  "schur_split: partition does not fit P");
  SchurSplit out;
  const auto np = N - r;
  if (np == 0) {
    out.s = P(0, 0);
    out.gain = Vector::Zero(0);
    return out;
  }
  const Matrix Ppp = P.bottomRightCorner(np, np);
  Eigen::LLT<Matrix> llt(Ppp);
  detail::require(llt.info() == Eigen::Success, ErrorCode::NonPositiveSchur,
                  "P₊₊ is not positive definite");
  const Vector p1p = P.block(0, r, 1, np).transpose();
  out.gain = llt.solve(p1p);
  out.s = P(0, 0) - p1p.dot(out.gain);
  return out;
}

inline ProjectedAlgorithm synthesize(const iqclift::AugmentedSystem& aug,
                                     const certify::RateCertificate& cert,
                                     const projection::ConstraintSet& set) {
  detail::require(cert.P.rows() == aug.dim() && cert.P.cols() == aug.dim() && cert.ell == aug.ell,
                  ErrorCode::PartitionMismatch,
                  "certificate P is " + std::to_string(cert.P.rows()) + "×" +
                      std::to_string(cert.P.cols()) + " but the augmented system has dimension " +
                      std::to_string(aug.dim()));
  projection::validate(set, aug.canon.d);
  const SchurSplit sp = schur_split(cert.P, aug.r());
  detail::require(sp.s > 0.0, ErrorCode::NonPositiveSchur,
                  "Schur complement s = " + std::to_string(sp.s) + " is not positive");
  ProjectedAlgorithm alg;
  alg.aug = aug;
  alg.cert = cert;
  alg.set = set;
  alg.s = sp.s;
  alg.gain = sp.gain;
  const int tail = aug.canon.tail();
  alg.chi = sp.gain.head(tail);
  alg.filter_gain = sp.gain.tail(sp.gain.size() - tail);
  return alg;
}

namespace detail_ {

inline void require_finite(const Matrix& X, const char* what) {
  detail::require(X.allFinite(), ErrorCode::NonFiniteState,
                  std::string(what) + ": state became non-finite");
}

}  // namespace detail_

// Gradient applied at the current output y_k = ξ¹_{r−1}.
inline Vector current_gradient(const canonical::CanonicalSystem& cs, const Matrix& X,
                               const oracles::ObjectiveOracle& oracle) {
  return oracle.gradient(X.row(cs.r - 1).transpose());
}

struct StepInfo {
  Vector y_half;
  Vector y_proj;
};

// One step of the implementable algorithm on the canonical state (n×d).
inline Matrix step(const ProjectedAlgorithm& alg, const Matrix& X,
                   const oracles::ObjectiveOracle& oracle, StepInfo* info = nullptr) {
  const auto& cs = alg.canon();
  detail::require(X.rows() == cs.n && X.cols() == cs.d, ErrorCode::DimensionMismatch,
                  "step: state must be n×d");
  const Vector u = current_gradient(cs, X, oracle);
  Matrix next = cs.a() * X + cs.b() * u.transpose();
  const Vector y_half = next.row(0).transpose();
  const Vector y_proj = projection::project_euclidean(alg.set, y_half);
  next.row(0) = y_proj.transpose();
  if (cs.tail() > 0) next.bottomRows(cs.tail()) -= alg.chi * (y_proj - y_half).transpose();
  detail_::require_finite(next, "step");
  if (info) *info = {y_half, y_proj};
  return next;
}

// Same iteration carried out on the augmented state (ξ, ζ) with the full correction −GΔ; its
// first n rows coincide with step().
inline Matrix lifted_step(const ProjectedAlgorithm& alg, const Matrix& X,
                          const oracles::ObjectiveOracle& oracle, StepInfo* info = nullptr) {
  const auto& aug = alg.aug;
  detail::require(X.rows() == aug.dim() && X.cols() == aug.canon.d, ErrorCode::DimensionMismatch,
                  "lifted_step: state must be (n+2ℓ)×d");
  const Vector u = oracle.gradient(X.row(aug.output_row()).transpose());
  Matrix next = aug.A * X + aug.B * u.transpose();
  const Vector y_half = next.row(0).transpose();
  const Vector y_proj = projection::project_euclidean(alg.set, y_half);
  next.row(0) = y_proj.transpose();
  if (alg.gain.size() > 0) next.bottomRows(alg.gain.size()) -= alg.gain * (y_proj - y_half).transpose();
  detail_::require_finite(next, "lifted_step");
  if (info) *info = {y_half, y_proj};
  return next;
}

// Baseline: canonical update followed by a plain projection of the leading output, no
// correction of the internal state.
inline Matrix naive_step(const canonical::CanonicalSystem& cs, const projection::ConstraintSet& set,
                         const Matrix& X, const oracles::ObjectiveOracle& oracle,
                         StepInfo* info = nullptr) {
  detail::require(X.rows() == cs.n && X.cols() == cs.d, ErrorCode::DimensionMismatch,
                  "naive_step: state must be n×d");
  const Vector u = current_gradient(cs, X, oracle);
  Matrix next = cs.a() * X + cs.b() * u.transpose();
  const Vector y_half = next.row(0).transpose();
  const Vector y_proj = projection::project_euclidean(set, y_half);
  next.row(0) = y_proj.transpose();
  detail_::require_finite(next, "naive_step");
  if (info) *info = {y_half, y_proj};
  return next;
}

// Naive baseline run on the augmented state, so that its P-norm error can be reported.
inline Matrix naive_lifted_step(const iqclift::AugmentedSystem& aug,
                                const projection::ConstraintSet& set, const Matrix& X,
                                const oracles::ObjectiveOracle& oracle, StepInfo* info = nullptr) {
  const Vector u = oracle.gradient(X.row(aug.output_row()).transpose());
  Matrix next = aug.A * X + aug.B * u.transpose();
  const Vector y_half = next.row(0).transpose();
  const Vector y_proj = projection::project_euclidean(set, y_half);
  next.row(0) = y_proj.transpose();
  detail_::require_finite(next, "naive_step");
  if (info) *info = {y_half, y_proj};
  return next;
}

// Augmented initial state for a canonical state: the filter starts from zero pre-history.
inline Matrix lift_state(const iqclift::AugmentedSystem& aug, const Matrix& X) {
  detail::require(X.rows() == aug.canon.n, ErrorCode::DimensionMismatch,
                  "lift_state: expected an n×d canonical state");
  Matrix out = Matrix::Zero(aug.dim(), X.cols());
  out.topRows(aug.canon.n) = X;
  return out;
}

struct ProjectedTrajectory {
  std::vector<Matrix> states;        // augmented states x_0 … x_K
  std::vector<Vector> outputs;       // y_0 … y_K
  std::vector<Vector> gradients;     // ∇f(y_k)
  std::vector<double> proj_residuals;  // ‖y_proj − y_half‖ for the step leaving x_k (0 at K)

  int horizon() const { return static_cast<int>(states.size()) - 1; }
};

enum class Variant { Projected, Naive };

// K steps from an augmented initial state.
inline ProjectedTrajectory run(const ProjectedAlgorithm& alg, const oracles::ObjectiveOracle& oracle,
                               const Matrix& x0, int K, Variant variant = Variant::Projected) {
  detail::require(K >= 0, ErrorCode::InvalidArgument, "run: horizon must be >= 0");
  detail::require(x0.rows() == alg.aug.dim() && x0.cols() == alg.aug.canon.d,
                  ErrorCode::DimensionMismatch, "run: x0 must be (n+2ℓ)×d");
  ProjectedTrajectory tr;
  Matrix x = x0;
  const int row = alg.aug.output_row();
  for (int k = 0;; ++k) {
    const Vector y = x.row(row).transpose();
    tr.states.push_back(x);
    tr.outputs.push_back(y);
    tr.gradients.push_back(oracle.gradient(y));
    if (k == K) {
      tr.proj_residuals.push_back(0.0);
      break;
    }
    StepInfo info;
    x = variant == Variant::Projected ? lifted_step(alg, x, oracle, &info)
                                      : naive_lifted_step(alg.aug, alg.set, x, oracle, &info);
    tr.proj_residuals.push_back((info.y_proj - info.y_half).norm());
  }
  return tr;
}

// Iterates the lifted algorithm until the step displacement drops below tol, then keeps going
// while the displacement still shrinks so that x* is accurate to round-off.
inline Matrix converge(const ProjectedAlgorithm& alg, const oracles::ObjectiveOracle& oracle,
                       const Matrix& x0, double tol = 1e-12, int max_iter = 200000,
                       Variant variant = Variant::Projected) {
  Matrix x = x0;
  auto advance = [&](const Matrix& z) {
    return variant == Variant::Projected ? lifted_step(alg, z, oracle)
                                         : naive_lifted_step(alg.aug, alg.set, z, oracle);
  };
  for (int k = 0; k < max_iter; ++k) {
    Matrix next = advance(x);
    double disp = (next - x).cwiseAbs().maxCoeff();
    x = std::move(next);
    if (disp > tol * std::max(1.0, x.cwiseAbs().maxCoeff())) continue;
    for (int extra = 0; extra < 2000 && disp > 0.0; ++extra) {
      next = advance(x);
      const double d = (next - x).cwiseAbs().maxCoeff();
      if (d >= disp) break;
      disp = d;
      x = std::move(next);
    }
    return x;
  }
  throw Error(ErrorCode::NotConverged,
              "no fixed point within " + std::to_string(max_iter) + " iterations");
}

struct FixedPointReport {
  Vector y_star;
  double gamma = 0.0;
  double kkt_residual = 0.0;      // ‖Π(y* − ∇f(y*)) − y*‖
  double stack_residual = 0.0;    // ‖ξ¹* − 1_r⊗y*‖
  double state_residual = 0.0;    // ‖ξ²* − (a21ξ¹* + a22ξ²* − χΔ*)‖
  double step_displacement = 0.0;
  bool ok = false;
};

// γ = (EᵀNE)⁻¹EᵀNH with N = I − K₂K₂†, E = e₁, H = [1; 0; −χ].
inline double gamma_factor(const ProjectedAlgorithm& alg) {
  const auto& cs = alg.canon();
  const auto ks = canonical::detail_::split_k(cs);
  Matrix Nmat = Matrix::Identity(cs.n, cs.n);
  if (cs.tail() > 0) Nmat -= ks.k2 * ks.k2_pinv;
  Vector E = Vector::Unit(cs.n, 0);
  Vector H = Vector::Zero(cs.n);
  H(0) = 1.0;
  if (cs.tail() > 0) H.tail(cs.tail()) = -alg.chi;
  const double ene = E.dot(Nmat * E);
  detail::require(std::abs(ene) > 1e-14, ErrorCode::SingularK2, "EᵀNE vanishes");
  return E.dot(Nmat * H) / ene;
}

inline double kkt_residual(const projection::ConstraintSet& set,
                           const oracles::ObjectiveOracle& oracle, const Vector& y, double t = 1.0) {
  return (projection::project_euclidean(set, y - t * oracle.gradient(y)) - y).norm();
}

// x_star is the canonical part (n×d) or the full augmented state of a converged run.
inline FixedPointReport check_fixed_point(const ProjectedAlgorithm& alg,
                                          const oracles::ObjectiveOracle& oracle,
                                          const Matrix& x_star, double displacement_tol = 1e-9) {
  const auto& cs = alg.canon();
  const Matrix X = x_star.topRows(cs.n);
  StepInfo info;
  const Matrix next = step(alg, X, oracle, &info);
  FixedPointReport rep;
  rep.step_displacement = (next - X).norm();
  detail::require(rep.step_displacement <= displacement_tol * std::max(1.0, X.norm()),
                  ErrorCode::NotConverged,
                  "state is not a fixed point (displacement " +
                      std::to_string(rep.step_displacement) + ")");
  rep.y_star = X.row(cs.r - 1).transpose();
  rep.gamma = gamma_factor(alg);
  rep.kkt_residual = kkt_residual(alg.set, oracle, rep.y_star);
  rep.stack_residual = (X.topRows(cs.r) - Vector::Ones(cs.r) * rep.y_star.transpose()).norm();
  if (cs.tail() > 0) {
    const Matrix rhs = cs.a21 * X.topRows(cs.r) + cs.a22 * X.bottomRows(cs.tail()) -
                       alg.chi * (info.y_proj - info.y_half).transpose();
    rep.state_residual = (X.bottomRows(cs.tail()) - rhs).norm();
  }
  rep.ok = rep.gamma > 0.0 && rep.kkt_residual <= 1e-6;
  return rep;
}

// Worst per-step ratio ‖x_{k+1} − x*‖_P / ‖x_k − x*‖_P over k ≥ k_min. Steps whose error is
// below rel_floor·(1 + ‖x*‖_P) are skipped: there round-off in x* dominates the ratio.
inline double worst_contraction(const Matrix& P, const std::vector<Matrix>& states,
                                const Matrix& x_star, int k_min, double rel_floor = 1e-7) {
  double worst = 0.0;
  const double floor = rel_floor * (1.0 + std::sqrt(detail::weighted_sq_norm(P, x_star)));
  for (size_t k = static_cast<size_t>(std::max(0, k_min)); k + 1 < states.size(); ++k) {
    const double a = std::sqrt(detail::weighted_sq_norm(P, states[k] - x_star));
    if (a <= floor) break;
    const double b = std::sqrt(detail::weighted_sq_norm(P, states[k + 1] - x_star));
    worst = std::max(worst, b / a);
  }
  return worst;
}

}  // namespace lureforge::projsynth
