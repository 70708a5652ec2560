#pragma once

#include "lureforge/canonical.hpp"
#include "lureforge/core.hpp"

namespace lureforge::iqclift {

// Shift-register filter whose output stacks (y_k, …, y_{k−ℓ}, u_k, …, u_{k−ℓ}). Its state holds
// (y_{k−1}, …, y_{k−ℓ}, u_{k−1}, …, u_{k−ℓ}).
struct LiftFilter {
  int ell = 0;
  Matrix a;    // 2ℓ×2ℓ
  Matrix b_y;  // 2ℓ×1
  Matrix b_u;  // 2ℓ×1
  Matrix c;    // 2(ℓ+1)×2ℓ
  Matrix d_y;  // 2(ℓ+1)×1
  Matrix d_u;  // 2(ℓ+1)×1

  int state_dim() const { return 2 * ell; }
  int output_dim() const { return 2 * (ell + 1); }
};

inline LiftFilter build_filter(int ell) {
  detail::require(ell >= 0, ErrorCode::InvalidArgument, "build_filter: ell must be >= 0");
  LiftFilter f;
  f.ell = ell;
  const int h = ell + 1;
  Matrix a0 = Matrix::Zero(ell, ell);
  for (int i = 1; i < ell; ++i) a0(i, i - 1) = 1.0;
  Matrix b0 = Matrix::Zero(ell, 1);
  if (ell > 0) b0(0, 0) = 1.0;
  Matrix c0 = Matrix::Zero(h, ell);
  c0.bottomRows(ell) = Matrix::Identity(ell, ell);
  Matrix d0 = Matrix::Zero(h, 1);
  d0(0, 0) = 1.0;

  f.a = Matrix::Zero(2 * ell, 2 * ell);
  f.a.topLeftCorner(ell, ell) = a0;
  f.a.bottomRightCorner(ell, ell) = a0;
  f.b_y = Matrix::Zero(2 * ell, 1);
  f.b_y.topRows(ell) = b0;
  f.b_u = Matrix::Zero(2 * ell, 1);
  f.b_u.bottomRows(ell) = b0;
  f.c = Matrix::Zero(2 * h, 2 * ell);
  f.c.topLeftCorner(h, ell) = c0;
  f.c.bottomRightCorner(h, ell) = c0;
  f.d_y = Matrix::Zero(2 * h, 1);
  f.d_y.topRows(h) = d0;
  f.d_u = Matrix::Zero(2 * h, 1);
  f.d_u.bottomRows(h) = d0;
  return f;
}

// Canonical algorithm in series with the lifting filter, state x = (ξ̃, ζ).
struct AugmentedSystem {
  Matrix A, B, C, D;
  canonical::CanonicalSystem canon;
  int ell = 0;

  int dim() const { return static_cast<int>(A.rows()); }
  // Partition of x: block "1" = {0}, block "r" = [1, r), block "r+" = [r, dim).
  int r() const { return canon.r; }
  int rplus_size() const { return dim() - canon.r; }
  int output_row() const { return canon.r - 1; }
};

inline AugmentedSystem augment(const canonical::CanonicalSystem& cs, const LiftFilter& f) {
  detail::require(f.a.rows() == 2 * f.ell && f.c.rows() == 2 * (f.ell + 1),
                  ErrorCode::DimensionMismatch, "augment: malformed filter");
  detail::require(cs.a11.rows() == cs.r && cs.a22.rows() == cs.tail(),
                  ErrorCode::DimensionMismatch, "augment: malformed canonical system");
  const int n = cs.n, nz = f.state_dim(), N = n + nz;
  AugmentedSystem aug;
  aug.canon = cs;
  aug.ell = f.ell;
  const Matrix ct = cs.c();
  aug.A = Matrix::Zero(N, N);
  aug.A.topLeftCorner(n, n) = cs.a();
  aug.A.bottomLeftCorner(nz, n) = f.b_y * ct;
  aug.A.bottomRightCorner(nz, nz) = f.a;
  aug.B = Matrix::Zero(N, 1);
  aug.B.topRows(n) = cs.b();
  aug.B.bottomRows(nz) = f.b_u;
  aug.C = Matrix::Zero(f.output_dim(), N);
  aug.C.leftCols(n) = f.d_y * ct;
  aug.C.rightCols(nz) = f.c;
  aug.D = f.d_u;
  return aug;
}

inline bool is_doubly_hyperdominant(const Matrix& Q, double tol = 1e-10) {
  if (Q.rows() != Q.cols()) return false;
  for (Eigen::Index i = 0; i < Q.rows(); ++i)
    for (Eigen::Index j = 0; j < Q.cols(); ++j)
      if (i != j && Q(i, j) > tol) return false;
  return (Q.rowwise().sum().array() >= -tol).all() && (Q.colwise().sum().array() >= -tol).all();
}

// Loop transformation 𝒯 = [[L, −1], [−m, 1]] ⊗ I_{ℓ+1}.
inline Matrix loop_transform(double m, double L, int ell) {
  Matrix t(2, 2);
  t << L, -1.0, -m, 1.0;
  return sssys::expand(t, ell + 1);
}

inline Matrix rho_weights(double rho, int ell) {
  Vector w(ell + 1);
  for (int i = 0; i <= ell; ++i) w(i) = std::pow(rho, i);
  return w.asDiagonal();
}

// 𝒯ᵀ [[0, Xᵀ], [X, 0]] 𝒯 for an (ℓ+1)×(ℓ+1) block X.
inline Matrix off_diagonal_form(const Matrix& X, const Matrix& T) {
  const auto h = X.rows();
  Matrix inner = Matrix::Zero(2 * h, 2 * h);
  inner.topRightCorner(h, h) = X.transpose();
  inner.bottomLeftCorner(h, h) = X;
  return T.transpose() * inner * T;
}

struct Multiplier {
  Matrix Q, Qt;
  double rho = 0.0, m = 0.0, L = 0.0;
  int ell = 0;
  Matrix M_Q, M_Qt;  // the two summands of M
  Matrix M;
};

inline Multiplier build_multiplier(const Matrix& Q, const Matrix& Qt, double rho, double m, double L,
                                   int ell) {
  detail::require(Q.rows() == ell + 1 && Q.cols() == ell + 1 && Qt.rows() == ell + 1 &&
                      Qt.cols() == ell + 1,
                  ErrorCode::DimensionMismatch, "build_multiplier: Q and Qt must be (ℓ+1)×(ℓ+1)");
  detail::require(is_doubly_hyperdominant(Q) && is_doubly_hyperdominant(Qt), ErrorCode::InvalidCone,
                  "build_multiplier: Q and Qt must be doubly hyperdominant");
  detail::require(rho > 0.0 && rho < 1.0, ErrorCode::InvalidArgument,
                  "build_multiplier: rho must lie in (0, 1)");
  detail::require(m > 0.0 && m <= L, ErrorCode::InvalidSector, "build_multiplier: need 0 < m <= L");
  Multiplier mult{Q, Qt, rho, m, L, ell, {}, {}, {}};
  const Matrix T = loop_transform(m, L, ell);
  const Matrix Tr = rho_weights(rho, ell);
  mult.M_Q = off_diagonal_form(Q, T);
  mult.M_Qt = off_diagonal_form(Tr * Qt * Tr, T);
  mult.M = mult.M_Q + mult.M_Qt;
  return mult;
}

// Lifted stack z_k = (y_k, …, y_{k−ℓ}, u_k, …, u_{k−ℓ}) built directly from recorded signals;
// entries before time 0 are zero. Returned as 2(ℓ+1)×d.
inline Matrix lifted_stack(const std::vector<Vector>& ys, const std::vector<Vector>& us, int k,
                           int ell) {
  const auto d = ys.front().size();
  Matrix z = Matrix::Zero(2 * (ell + 1), d);
  for (int i = 0; i <= ell; ++i) {
    if (k - i < 0) break;
    z.row(i) = ys[k - i].transpose();
    z.row(ell + 1 + i) = us[k - i].transpose();
  }
  return z;
}

}  // namespace lureforge::iqclift
