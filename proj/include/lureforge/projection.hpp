#pragma once

#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "lureforge/core.hpp"

namespace lureforge::projection {

struct Unconstrained {};

struct Box {
  Vector lo, hi;
};

// {y : aᵀy ≤ b}
struct Halfspace {
  Vector a;
  double b = 0.0;
};

struct Ball {
  Vector center;
  double radius = 1.0;
};

// {y : yᵀ W y ≤ c}
struct Ellipsoid {
  Matrix W;
  double c = 1.0;
};

// {y : A y ≤ b}
struct Polyhedron {
  Matrix A;
  Vector b;
};

using ConstraintSet = std::variant<Unconstrained, Box, Halfspace, Ball, Ellipsoid, Polyhedron>;

inline std::string kind_name(const ConstraintSet& set) {
  static const char* names[] = {"none", "box", "halfspace", "ball", "ellipsoid", "polyhedron"};
  return names[set.index()];
}

// Checks parameters against the ambient dimension d (d < 0 skips the dimension check).
inline void validate(const ConstraintSet& set, int d = -1) {
  auto dim_ok = [d](Eigen::Index k) { return d < 0 || k == d; };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          detail::require(s.lo.size() == s.hi.size() && dim_ok(s.lo.size()),
                          ErrorCode::DimensionMismatch, "box bounds have the wrong length");
          detail::require((s.lo.array() <= s.hi.array()).all(), ErrorCode::EmptySet,
                          "box has lo > hi in some coordinate");
        } else if constexpr (std::is_same_v<T, Halfspace>) {
          detail::require(dim_ok(s.a.size()), ErrorCode::DimensionMismatch,
                          "halfspace normal has the wrong length");
          detail::require(s.a.norm() > 0.0, ErrorCode::InvalidArgument,
                          "halfspace normal must be nonzero");
        } else if constexpr (std::is_same_v<T, Ball>) {
          detail::require(dim_ok(s.center.size()), ErrorCode::DimensionMismatch,
                          "ball center has the wrong length");
          detail::require(s.radius >= 0.0, ErrorCode::EmptySet, "ball radius must be >= 0");
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          detail::require(s.W.rows() == s.W.cols() && dim_ok(s.W.rows()),
                          ErrorCode::DimensionMismatch, "ellipsoid W has the wrong shape");
          detail::require((s.W - s.W.transpose()).norm() <= 1e-12 * (1.0 + s.W.norm()),
                          ErrorCode::NotPositiveDefinite, "ellipsoid W is not symmetric");
          detail::require(detail::min_eigenvalue(s.W) > 0.0, ErrorCode::NotPositiveDefinite,
                          "ellipsoid W is not positive definite");
          detail::require(s.c >= 0.0, ErrorCode::EmptySet, "ellipsoid level c must be >= 0");
        } else if constexpr (std::is_same_v<T, Polyhedron>) {
          detail::require(s.A.rows() == s.b.size() && dim_ok(s.A.cols()),
                          ErrorCode::DimensionMismatch, "polyhedron A, b have inconsistent shapes");
        }
      },
      set);
}

inline bool contains(const ConstraintSet& set, const Vector& y, double tol = 1e-10) {
  return std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Unconstrained>) {
          return true;
        } else if constexpr (std::is_same_v<T, Box>) {
          return (y.array() >= s.lo.array() - tol).all() && (y.array() <= s.hi.array() + tol).all();
        } else if constexpr (std::is_same_v<T, Halfspace>) {
          return s.a.dot(y) <= s.b + tol * (1.0 + std::abs(s.b));
        } else if constexpr (std::is_same_v<T, Ball>) {
          return (y - s.center).norm() <= s.radius + tol;
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          return y.dot(s.W * y) <= s.c + tol * (1.0 + s.c);
        } else {
          return ((s.A * y - s.b).array() <= tol * (1.0 + s.b.array().abs())).all();
        }
      },
      set);
}

namespace detail_ {

// Euclidean projection onto {y : yᵀWy ≤ c}. The minimizer is y(λ) = (I + λW)⁻¹v for the root
// λ ≥ 0 of φ(λ) = y(λ)ᵀWy(λ) − c, which is convex and decreasing on [0, ∞). Newton from the
// left converges monotonically; bisection takes over whenever a step leaves the bracket.
inline Vector project_ellipsoid(const Ellipsoid& e, const Vector& v) {
  if (v.dot(e.W * v) <= e.c) return v;
  if (e.c == 0.0) return Vector::Zero(v.size());
  Eigen::SelfAdjointEigenSolver<Matrix> es(detail::sym(e.W));
  const Vector& lam = es.eigenvalues();
  const Vector w = es.eigenvectors().transpose() * v;
  auto phi = [&](double t, double* dphi) {
    double f = -e.c, df = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double den = 1.0 + t * lam(i);
      const double q = lam(i) * w(i) * w(i);
      f += q / (den * den);
      df += -2.0 * q * lam(i) / (den * den * den);
    }
    if (dphi) *dphi = df;
    return f;
  };
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200 && phi(hi, nullptr) > 0.0; ++i) hi *= 2.0;
  detail::require(phi(hi, nullptr) <= 0.0, ErrorCode::ConvergenceFailure,
                  "ellipsoid projection: could not bracket the multiplier");
  double t = 0.0;
  bool done = false;
  for (int it = 0; it < 500; ++it) {
    double df = 0.0;
    const double f = phi(t, &df);
    if (std::abs(f) <= 1e-12 * e.c) {
      done = true;
      break;
    }
    if (f > 0.0)
      lo = t;
    else
      hi = t;
    double next = df < 0.0 ? t - f / df : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo <= 1e-16 * std::max(1.0, hi)) {
      t = hi;
      done = true;
      break;
    }
    t = next;
  }
  detail::require(done || std::abs(phi(t, nullptr)) <= 1e-10 * std::max(1.0, e.c),
                  ErrorCode::ConvergenceFailure, "ellipsoid projection did not converge");
  Vector z(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) z(i) = w(i) / (1.0 + t * lam(i));
  Vector y = es.eigenvectors() * z;
  // Pull the point onto the boundary against round-off so that Π(Π(v)) = Π(v).
  const double q = y.dot(e.W * y);
  if (q > e.c) y *= std::sqrt(e.c / q);
  return y;
}

// Euclidean projection onto {y : Ay ≤ b} by the dual active-set method of Goldfarb and
// Idnani specialised to the identity Hessian.
inline Vector project_polyhedron(const Polyhedron& p, const Vector& v) {
  const auto m = p.A.rows();
  const auto d = v.size();
  Vector y = v;
  std::vector<Eigen::Index> active;
  std::vector<double> u;  // multipliers of the active rows
  const double scale = 1.0 + p.b.cwiseAbs().maxCoeff() + v.cwiseAbs().maxCoeff();
  const double tol = 1e-13 * scale;
  for (int outer = 0; outer < 50 * (static_cast<int>(m) + 1); ++outer) {
    Eigen::Index viol = -1;
    double worst = tol;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double s = (p.A.row(i).dot(y) - p.b(i)) / p.A.row(i).norm();
      if (s > worst) {
        worst = s;
        viol = i;
      }
    }
    if (viol < 0) return y;
    double up = 0.0;  // multiplier of the entering row
    for (int inner = 0; inner < 4 * static_cast<int>(m) + 8; ++inner) {
      const Vector a = p.A.row(viol).transpose();
      const auto k = static_cast<Eigen::Index>(active.size());
      Matrix N(k, d);
      for (Eigen::Index j = 0; j < k; ++j) N.row(j) = p.A.row(active[j]);
      Vector r = Vector::Zero(k), z = a;
      if (k > 0) {
        r = (N * N.transpose()).ldlt().solve(N * a);
        z = a - N.transpose() * r;
      }
      const double slack = p.A.row(viol).dot(y) - p.b(viol);
      const double zz = z.squaredNorm();
      const double t2 = zz > 1e-14 * a.squaredNorm() ? slack / zz
                                                    : std::numeric_limits<double>::infinity();
      double t1 = std::numeric_limits<double>::infinity();
      Eigen::Index drop = -1;
      for (Eigen::Index j = 0; j < k; ++j)
        if (r(j) > 0.0 && u[j] / r(j) < t1) {
          t1 = u[j] / r(j);
          drop = j;
        }
      const double t = std::min(t1, t2);
      detail::require(std::isfinite(t), ErrorCode::EmptySet, "polyhedron is empty");
      y -= t * z;
      for (Eigen::Index j = 0; j < k; ++j) u[j] -= t * r(j);
      up += t;
      if (t2 <= t1) {
        active.push_back(viol);
        u.push_back(up);
        break;
      }
      active.erase(active.begin() + drop);
      u.erase(u.begin() + drop);
    }
  }
  throw Error(ErrorCode::ConvergenceFailure, "polyhedron projection did not terminate");
}

}  // namespace detail_

inline Vector project_euclidean(const ConstraintSet& set, const Vector& v) {
  return std::visit(
      [&](const auto& s) -> Vector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Unconstrained>) {
          return v;
        } else if constexpr (std::is_same_v<T, Box>) {
          return v.cwiseMax(s.lo).cwiseMin(s.hi);
        } else if constexpr (std::is_same_v<T, Halfspace>) {
          const double excess = s.a.dot(v) - s.b;
          return excess <= 0.0 ? v : Vector(v - (excess / s.a.squaredNorm()) * s.a);
        } else if constexpr (std::is_same_v<T, Ball>) {
          const Vector diff = v - s.center;
          const double dist = diff.norm();
          return dist <= s.radius ? v : Vector(s.center + (s.radius / dist) * diff);
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          return detail_::project_ellipsoid(s, v);
        } else {
          return detail_::project_polyhedron(s, v);
        }
      },
      set);
}

}  // namespace lureforge::projection
