#pragma once

#include "lureforge/core.hpp"
#include "lureforge/sssys.hpp"

namespace lureforge::canonical {

// Realization whose leading r states are the output stack (y_{k+r−1}, …, y_k):
//
//   [ξ¹₊]   [a11 a12] [ξ¹]   [g e₁]
//   [ξ²₊] = [a21 a22] [ξ²] + [ 0  ] u,     y = ξ¹_{r−1}
//
// with rows 1..r−1 of [a11 a12] forming a down-shift.
struct CanonicalSystem {
  Matrix a11, a12, a21, a22;
  double g = 0.0;
  int r = 1;
  int n = 1;
  int d = 1;
  // canonical state = from_original · (state of the system handed to canonicalize)
  Matrix from_original;

  int tail() const { return n - r; }

  Matrix a() const {
    Matrix out(n, n);
    out.topLeftCorner(r, r) = a11;
    out.topRightCorner(r, n - r) = a12;
    out.bottomLeftCorner(n - r, r) = a21;
    out.bottomRightCorner(n - r, n - r) = a22;
    return out;
  }
  Matrix b() const {
    Matrix out = Matrix::Zero(n, 1);
    out(0, 0) = g;
    return out;
  }
  Matrix c() const {
    Matrix out = Matrix::Zero(1, n);
    out(0, r - 1) = 1.0;
    return out;
  }
  sssys::ReducedLTI lti() const { return sssys::ReducedLTI{a(), b(), c(), d}; }
};

inline CanonicalSystem from_blocks(const Matrix& a, double g, int r, int d) {
  const int n = static_cast<int>(a.rows());
  CanonicalSystem cs;
  cs.a11 = a.topLeftCorner(r, r);
  cs.a12 = a.topRightCorner(r, n - r);
  cs.a21 = a.bottomLeftCorner(n - r, r);
  cs.a22 = a.bottomRightCorner(n - r, n - r);
  cs.g = g;
  cs.r = r;
  cs.n = n;
  cs.d = d;
  cs.from_original = Matrix::Identity(n, n);
  return cs;
}

// True when (a, b, c) already has the canonical block pattern for relative degree r.
inline bool is_canonical(const sssys::ReducedLTI& sys, int r, double tol = 1e-12) {
  const int n = sys.order();
  if (r > n) return false;
  Matrix b_expected = Matrix::Zero(n, 1);
  b_expected(0, 0) = sys.b(0, 0);
  Matrix c_expected = Matrix::Zero(1, n);
  c_expected(0, r - 1) = 1.0;
  if ((sys.b - b_expected).norm() > tol || (sys.c - c_expected).norm() > tol) return false;
  for (int i = 1; i < r; ++i) {
    RowVector row = RowVector::Zero(n);
    row(i - 1) = 1.0;
    if ((sys.a.row(i) - row).norm() > tol) return false;
  }
  return true;
}

// Rank of the output stack [c a^{r−1}; …; c] decided away from the ambiguity band.
inline int decide_rank(const Matrix& M) {
  Eigen::JacobiSVD<Matrix> svd(M);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double smax = s(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double rel = s(i) / smax;
    detail::require(!(rel >= 1e-11 && rel <= 1e-7), ErrorCode::RankDecisionAmbiguous,
                    "singular value " + std::to_string(s(i)) + " of the output stack lies in the "
                    "ambiguity band [1e-11, 1e-7]·σ_max");
    if (rel > 1e-9) ++rank;
  }
  return rank;
}

// Rewrites a system into the canonical structure. Input must be in observable form
// (b = e₁, first row of a = e₁ᵀ) or already canonical; the latter is returned verbatim.
inline CanonicalSystem canonicalize(const sssys::ReducedLTI& sys) {
  sssys::validate(sys);
  const auto [r, g] = sssys::relative_degree(sys);
  const int n = sys.order();

  if (is_canonical(sys, r)) return from_blocks(sys.a, sys.b(0, 0), r, sys.d);

  detail::require(sssys::is_observable_form(sys), ErrorCode::NotObservableForm,
                  "canonicalize expects b = e1 and a first row e1ᵀ (or a canonical input)");

  Matrix Qr(r, n);
  {
    Matrix row = sys.c;
    for (int i = r - 1; i >= 0; --i) {
      Qr.row(i) = row;
      row = row * sys.a;
    }
  }

  CanonicalSystem cs;
  cs.r = r;
  cs.g = g;
  cs.d = sys.d;

  const int rank = decide_rank(Qr);
  if (rank == r) {
    // T = [Q_r; 0 S₂] with S₂ an orthonormal basis of the complement of rows 2..r of Q_r
    // restricted to the last n−1 coordinates.
    Matrix T(n, n);
    T.topRows(r) = Qr;
    if (n > r) {
      Matrix S = Matrix::Zero(n - r, n);
      if (r > 1) {
        Eigen::JacobiSVD<Matrix> svd(Qr.bottomRightCorner(r - 1, n - 1), Eigen::ComputeFullV);
        S.rightCols(n - 1) = svd.matrixV().rightCols(n - r).transpose();
      } else {
        S.rightCols(n - 1) = Matrix::Identity(n - 1, n - 1);
      }
      T.bottomRows(n - r) = S;
    }
    const sssys::ReducedLTI t = sssys::similarity(sys, T);
    cs = from_blocks(t.a, g, r, sys.d);
    cs.from_original = T;
    // The shift rows and the input/output patterns hold exactly by construction; clean
    // round-off so that downstream structure checks see the exact pattern.
    for (int i = 1; i < r; ++i) {
      cs.a11.row(i).setZero();
      cs.a11(i, i - 1) = 1.0;
      cs.a12.row(i).setZero();
    }
    return cs;
  }

  // Rank-deficient output stack: switch to (y_{k+r−1}, ξ₂…ξ_n) and append the delayed
  // outputs (y_{k+r−2}, …, y_k) as explicit states.
  Matrix Tbar = Matrix::Zero(n, n);
  Tbar.row(0) = Qr.row(0);
  Tbar.bottomRightCorner(n - 1, n - 1) = Matrix::Identity(n - 1, n - 1);
  const sssys::ReducedLTI bar = sssys::similarity(sys, Tbar);
  const int nn = n + r - 1;
  Matrix a = Matrix::Zero(nn, nn);
  a(0, 0) = bar.a(0, 0);
  a.block(0, r, 1, n - 1) = bar.a.block(0, 1, 1, n - 1);
  for (int i = 1; i < r; ++i) a(i, i - 1) = 1.0;
  a.block(r, 0, n - 1, 1) = bar.a.block(1, 0, n - 1, 1);
  a.block(r, r, n - 1, n - 1) = bar.a.block(1, 1, n - 1, n - 1);
  cs = from_blocks(a, g, r, sys.d);
  Matrix M = Matrix::Zero(nn, n);
  M.topRows(r) = Qr;
  M.bottomRightCorner(n - 1, n - 1) = Matrix::Identity(n - 1, n - 1);
  cs.from_original = M;
  return cs;
}

struct StructureReport {
  double lemma1_residual = 0.0;
  double equivalent_form_residual = 0.0;
  double g = 0.0;
  int k2_rank = 0;
  int k2_columns = 0;
  double io_equivalence_error = 0.0;  // filled in by callers that simulate both realizations
  bool ok = false;
};

namespace detail_ {

struct KSplit {
  Matrix k1, k2;
  Matrix k2_pinv;  // (K₂ᵀK₂)⁻¹K₂ᵀ, computed through the SVD
  int rank = 0;
};

inline KSplit split_k(const CanonicalSystem& cs) {
  const Matrix K = cs.a() - Matrix::Identity(cs.n, cs.n);
  KSplit ks;
  ks.k1 = K.leftCols(cs.r);
  ks.k2 = K.rightCols(cs.tail());
  if (cs.tail() == 0) {
    ks.k2_pinv = Matrix::Zero(0, cs.n);
    return ks;
  }
  Eigen::JacobiSVD<Matrix> svd(ks.k2, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double tol = 1e-12 * std::max(1.0, s(0));
  Vector sinv = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol) {
      sinv(i) = 1.0 / s(i);
      ++ks.rank;
    }
  ks.k2_pinv = svd.matrixV() * sinv.asDiagonal() * svd.matrixU().transpose();
  return ks;
}

}  // namespace detail_

// Fixed-point identities of the canonical form. The identity (I − K₂K₂†)K₁ξ¹ = 0 can only hold
// along the fixed-point direction ξ¹ = 1_r ⊗ y (the shift rows of K₁ are nonzero elsewhere when
// r > 1), so the residuals below are evaluated on K₁·1_r.
inline StructureReport structural_checks(const CanonicalSystem& cs) {
  StructureReport rep;
  rep.g = cs.g;
  const auto ks = detail_::split_k(cs);
  rep.k2_rank = ks.rank;
  rep.k2_columns = cs.tail();
  const Vector k1_ones = ks.k1 * Vector::Ones(cs.r);
  if (cs.tail() == 0) {
    rep.lemma1_residual = k1_ones.norm();
    rep.equivalent_form_residual =
        (cs.a11 * Vector::Ones(cs.r) - Vector::Ones(cs.r)).norm();
  } else {
    rep.lemma1_residual = (k1_ones - ks.k2 * (ks.k2_pinv * k1_ones)).norm();
    const Vector xi2 = ks.k2_pinv * k1_ones;
    const double top = (cs.a11 * Vector::Ones(cs.r) - cs.a12 * xi2 - Vector::Ones(cs.r)).norm();
    const double bottom =
        (cs.a21 * Vector::Ones(cs.r) -
         (cs.a22 - Matrix::Identity(cs.tail(), cs.tail())) * xi2)
            .norm();
    rep.equivalent_form_residual = std::hypot(top, bottom);
  }
  rep.ok = rep.lemma1_residual <= 1e-8 && rep.equivalent_form_residual <= 1e-8 && rep.g < 0.0 &&
           rep.k2_rank == rep.k2_columns;
  return rep;
}

// Equilibrium state for a prescribed output: ξ¹* = 1_r⊗y*, ξ²* = −K₂†K₁ξ¹*. Returned as an
// n×d block-row matrix.
inline Matrix fixed_point(const CanonicalSystem& cs, const Vector& y_star) {
  detail::require(y_star.size() == cs.d, ErrorCode::DimensionMismatch,
                  "fixed_point: y* must have dimension d");
  const auto ks = detail_::split_k(cs);
  detail::require(ks.rank == cs.tail(), ErrorCode::SingularK2,
                  "K₂ has rank " + std::to_string(ks.rank) + " < " + std::to_string(cs.tail()));
  Vector base(cs.n);
  base.head(cs.r).setOnes();
  if (cs.tail() > 0) base.tail(cs.tail()) = -ks.k2_pinv * (ks.k1 * Vector::Ones(cs.r));
  return base * y_star.transpose();
}

}  // namespace lureforge::canonical
