#pragma once

#include <unsupported/Eigen/KroneckerProduct>

#include <vector>

#include "lureforge/core.hpp"
#include "lureforge/oracles.hpp"

// State convention used throughout the library: a state of an order-n system acting on R^d
// is an n×d matrix whose row i is the i-th d-dimensional block. With that layout the full
// update (a⊗I_d)x + (b⊗I_d)u becomes a·X + b·uᵀ, so no Kronecker product is ever formed at
// run time.

namespace lureforge::sssys {

// LTI triple (a⊗I_d, b⊗I_d, c⊗I_d) stored by its d = 1 base matrices.
struct ReducedLTI {
  Matrix a;  // n×n
  Matrix b;  // n×1
  Matrix c;  // 1×n
  int d = 1;

  int order() const { return static_cast<int>(a.rows()); }
};

inline void validate(const ReducedLTI& sys) {
  const auto n = sys.a.rows();
  detail::require(n >= 1 && sys.d >= 1, ErrorCode::DimensionMismatch, "system needs n >= 1, d >= 1");
  detail::require(sys.a.cols() == n && sys.b.rows() == n && sys.b.cols() == 1 &&
                      sys.c.rows() == 1 && sys.c.cols() == n,
                  ErrorCode::DimensionMismatch, "system matrices must be n×n, n×1, 1×n");
  detail::require(sys.a.allFinite() && sys.b.allFinite() && sys.c.allFinite(),
                  ErrorCode::InvalidArgument, "system matrices contain non-finite entries");
}

inline ReducedLTI make_lti(Matrix a, Matrix b, Matrix c, int d = 1) {
  ReducedLTI sys{std::move(a), std::move(b), std::move(c), d};
  validate(sys);
  return sys;
}

inline Matrix expand(const Matrix& base, int d) {
  return Eigen::kroneckerProduct(base, Matrix::Identity(d, d));
}

namespace detail_ {

inline Matrix reduce_one(const Matrix& full, int d, const char* name) {
  detail::require(full.rows() % d == 0 && full.cols() % d == 0, ErrorCode::DimensionMismatch,
                  std::string(name) + ": dimensions are not multiples of d");
  Matrix base(full.rows() / d, full.cols() / d);
  for (Eigen::Index i = 0; i < base.rows(); ++i)
    for (Eigen::Index j = 0; j < base.cols(); ++j) base(i, j) = full(i * d, j * d);
  const double dev = (full - expand(base, d)).norm();
  detail::require(dev <= 1e-12 * full.norm(), ErrorCode::NonKroneckerStructure,
                  std::string(name) + " is not of the form (·)⊗I_d (relative deviation " +
                      std::to_string(full.norm() > 0 ? dev / full.norm() : dev) + ")");
  return base;
}

}  // namespace detail_

// Recovers the base matrices of a Kronecker-structured (A, B, C) with ambient dimension d.
inline ReducedLTI reduce(const Matrix& A_full, const Matrix& B_full, const Matrix& C_full, int d) {
  detail::require(d >= 1, ErrorCode::DimensionMismatch, "reduce: d must be >= 1");
  detail::require(A_full.rows() == A_full.cols() && A_full.rows() % d == 0,
                  ErrorCode::DimensionMismatch, "reduce: A must be nd×nd");
  const auto nd = A_full.rows();
  detail::require(B_full.rows() == nd && B_full.cols() == d && C_full.rows() == d &&
                      C_full.cols() == nd,
                  ErrorCode::DimensionMismatch, "reduce: B must be nd×d and C d×nd");
  return make_lti(detail_::reduce_one(A_full, d, "A"), detail_::reduce_one(B_full, d, "B"),
                  detail_::reduce_one(C_full, d, "C"), d);
}

struct RelativeDegree {
  int r = 0;
  double g = 0.0;  // c·a^{r−1}·b
};

// Smallest r with |c a^{r−1} b| > 1e-10·‖a‖^{r−1}‖b‖‖c‖.
inline RelativeDegree relative_degree(const ReducedLTI& sys) {
  validate(sys);
  const int n = sys.order();
  const double na = sys.a.norm(), nb = sys.b.norm(), nc = sys.c.norm();
  Matrix v = sys.b;
  for (int r = 1; r <= n; ++r) {
    const double g = (sys.c * v)(0, 0);
    const double thresh = 1e-10 * std::pow(na, r - 1) * nb * nc;
    if (std::abs(g) > thresh) return {r, g};
    v = sys.a * v;
  }
  throw Error(ErrorCode::NoFiniteRelativeDegree, "c a^{r-1} b vanishes for every r <= n");
}

inline ReducedLTI similarity(const ReducedLTI& sys, const Matrix& T) {
  const Matrix Tinv = T.inverse();
  return ReducedLTI{T * sys.a * Tinv, T * sys.b, sys.c * Tinv, sys.d};
}

inline bool is_observable_form(const ReducedLTI& sys, double tol = 1e-9) {
  const int n = sys.order();
  const double scale = std::max(1.0, sys.a.norm());
  Vector e1 = Vector::Unit(n, 0);
  return (sys.b.col(0) - e1).norm() <= tol && (sys.a.row(0).transpose() - e1).norm() <= tol * scale;
}

struct ObservableForm {
  ReducedLTI sys;
  Matrix transform;  // new state = transform · old state
};

// Similarity transform to the form ξ¹₊ = ξ¹ + u, ξ²₊ = a21 ξ¹ + a22 ξ². Its first row is the
// left eigenvector of a at 1 scaled so that it picks up b with unit gain; the remaining rows
// span b^⊥.
inline ObservableForm observable_form(const ReducedLTI& sys) {
  validate(sys);
  const int n = sys.order();
  if (is_observable_form(sys, 1e-12)) return {sys, Matrix::Identity(n, n)};

  const Matrix K = sys.a - Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(K, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const double tol = 1e-9 * std::max(1.0, sys.a.norm());
  detail::require(sv(n - 1) <= tol, ErrorCode::StructureUnreachable,
                  "a has no eigenvalue at 1 (smallest singular value of a − I is " +
                      std::to_string(sv(n - 1)) + ")");
  // Left null space of a − I; pick the direction with the largest gain on b.
  int nullity = 0;
  for (int i = n - 1; i >= 0 && sv(i) <= tol; --i) ++nullity;
  const Matrix U0 = svd.matrixU().rightCols(nullity);
  Vector w = U0 * (U0.transpose() * sys.b.col(0));
  const double wb = w.dot(sys.b.col(0));
  detail::require(std::abs(wb) > 1e-12 * std::max(1.0, sys.b.squaredNorm()),
                  ErrorCode::StructureUnreachable, "the eigenvalue at 1 is not reachable from b");
  w /= wb;

  Matrix T(n, n);
  T.row(0) = w.transpose();
  if (n > 1) {
    Eigen::JacobiSVD<Matrix> bsvd(sys.b.transpose(), Eigen::ComputeFullV);
    T.bottomRows(n - 1) = bsvd.matrixV().rightCols(n - 1).transpose();
  }
  ReducedLTI out = similarity(sys, T);
  detail::require(is_observable_form(out, 1e-8), ErrorCode::StructureUnreachable,
                  "transformed system misses the observable form");
  out.b = Matrix::Zero(n, 1);
  out.b(0, 0) = 1.0;
  out.a.row(0) = RowVector::Unit(n, 0);
  return {out, T};
}

inline ReducedLTI to_observable_form(const ReducedLTI& sys) { return observable_form(sys).sys; }

// Moves the entries flagged in `free` by a minimum-norm (Gauss-Newton on det(a − I)) change
// so that a gets an exact eigenvalue at 1. Printed realizations are usually rounded, which
// pushes the integrator pole slightly off 1.
inline Matrix restore_integrator(const Matrix& a, const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& free,
                                 int max_iter = 50) {
  detail::require(a.rows() == a.cols() && free.rows() == a.rows() && free.cols() == a.cols(),
                  ErrorCode::DimensionMismatch, "restore_integrator: shape mismatch");
  const auto n = a.rows();
  Matrix out = a;
  for (int it = 0; it < max_iter; ++it) {
    const Matrix K = out - Matrix::Identity(n, n);
    const double det = K.determinant();
    if (std::abs(det) <= 1e-15 * std::max(1.0, std::pow(K.norm(), static_cast<double>(n))))
      return out;
    // ∂det/∂K = det · K^{-T}
    Matrix grad = det * K.inverse().transpose();
    grad = grad.array() * free.cast<double>();
    const double gg = grad.squaredNorm();
    detail::require(gg > 0.0, ErrorCode::StructureUnreachable,
                    "restore_integrator: determinant does not depend on the free entries");
    out -= (det / gg) * grad;
  }
  const Matrix K = out - Matrix::Identity(n, n);
  detail::require(Eigen::JacobiSVD<Matrix>(K).singularValues()(n - 1) <= 1e-10,
                  ErrorCode::StructureUnreachable, "restore_integrator did not converge");
  return out;
}

// Unconstrained Lur'e loop: the LTI part in feedback with u_k = ∇f(y_k).
struct LureLoop {
  ReducedLTI sys;
  oracles::ObjectiveOracle oracle;
};

struct Trajectory {
  std::vector<Matrix> states;   // K+1 states, each n×d
  std::vector<Vector> outputs;  // y_0 … y_K
  std::vector<Vector> inputs;   // u_0 … u_K, u_k = ∇f(y_k)

  int horizon() const { return static_cast<int>(states.size()) - 1; }
};

inline Matrix as_block_rows(const Vector& x, int n, int d) {
  detail::require(x.size() == n * d, ErrorCode::DimensionMismatch,
                  "state has length " + std::to_string(x.size()) + ", expected n·d = " +
                      std::to_string(n * d));
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      x.data(), n, d);
}

inline Vector as_stacked(const Matrix& X) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = X;
  return Eigen::Map<const Vector>(rm.data(), rm.size());
}

inline Trajectory simulate(const LureLoop& loop, const Matrix& x0, int K) {
  const auto& sys = loop.sys;
  validate(sys);
  detail::require(loop.oracle.dim == sys.d, ErrorCode::DimensionMismatch,
                  "oracle dimension differs from the system's d");
  detail::require(x0.rows() == sys.order() && x0.cols() == sys.d, ErrorCode::DimensionMismatch,
                  "x0 must be n×d");
  detail::require(K >= 0, ErrorCode::InvalidArgument, "horizon must be >= 0");
  Trajectory traj;
  traj.states.reserve(K + 1);
  Matrix x = x0;
  for (int k = 0;; ++k) {
    const Vector y = (sys.c * x).transpose();
    const Vector u = loop.oracle.gradient(y);
    detail::require(x.allFinite() && u.allFinite(), ErrorCode::NonFiniteState,
                    "simulation diverged at step " + std::to_string(k));
    traj.states.push_back(x);
    traj.outputs.push_back(y);
    traj.inputs.push_back(u);
    if (k == K) break;
    x = sys.a * x + sys.b * u.transpose();
  }
  return traj;
}

inline Trajectory simulate(const LureLoop& loop, const Vector& x0, int K) {
  return simulate(loop, as_block_rows(x0, loop.sys.order(), loop.sys.d), K);
}

}  // namespace lureforge::sssys
