#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>

#include "lureforge/core.hpp"

namespace lureforge::oracles {

// Objective f in S(m, L) on R^d with an exact gradient. Immutable once built.
struct ObjectiveOracle {
  std::string kind;
  int dim = 0;
  double m = 0.0;
  double L = 0.0;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::optional<Vector> minimizer;
};

// f(y) = ½ yᵀ F y + pᵀ y.
inline ObjectiveOracle quadratic(const Matrix& F, const Vector& p) {
  detail::require(F.rows() == F.cols() && F.rows() == p.size(), ErrorCode::DimensionMismatch,
                  "quadratic: F must be d×d and p of length d");
  detail::require((F - F.transpose()).norm() <= 1e-12 * (1.0 + F.norm()),
                  ErrorCode::NotPositiveDefinite, "quadratic: F is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(detail::sym(F), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0);
  const double hi = es.eigenvalues()(F.rows() - 1);
  detail::require(lo > 0.0, ErrorCode::NotPositiveDefinite,
                  "quadratic: F has smallest eigenvalue " + std::to_string(lo));

  auto Fs = std::make_shared<const Matrix>(detail::sym(F));
  auto ps = std::make_shared<const Vector>(p);
  ObjectiveOracle o;
  o.kind = "quadratic";
  o.dim = static_cast<int>(p.size());
  o.m = lo;
  o.L = hi;
  o.value = [Fs, ps](const Vector& y) { return 0.5 * y.dot(*Fs * y) + ps->dot(y); };
  o.gradient = [Fs, ps](const Vector& y) -> Vector { return *Fs * y + *ps; };
  o.minimizer = Vector(Fs->ldlt().solve(-p));
  return o;
}

// f(y) = (μ/2)‖y‖² + log Σ_i exp(a_iᵀ y + b_i). The softmax Hessian is bounded by ½I, so
// f ∈ S(μ, μ + ‖A‖₂²/2). The minimizer has no closed form and is found by Newton's method.
inline ObjectiveOracle regularized_logsumexp(const Matrix& A, const Vector& b, double mu) {
  detail::require(A.rows() == b.size(), ErrorCode::DimensionMismatch,
                  "logsumexp: A must have one row per entry of b");
  detail::require(mu > 0.0, ErrorCode::NotPositiveDefinite, "logsumexp: mu must be positive");
  auto As = std::make_shared<const Matrix>(A);
  auto bs = std::make_shared<const Vector>(b);

  auto softmax = [As, bs](const Vector& y) -> Vector {
    Vector z = *As * y + *bs;
    const double zmax = z.maxCoeff();
    Vector w = (z.array() - zmax).exp().matrix();
    return w / w.sum();
  };

  ObjectiveOracle o;
  o.kind = "logsumexp";
  o.dim = static_cast<int>(A.cols());
  const double a_norm = Eigen::JacobiSVD<Matrix>(A).singularValues()(0);
  o.m = mu;
  o.L = mu + 0.5 * a_norm * a_norm;
  o.value = [As, bs, mu](const Vector& y) {
    Vector z = *As * y + *bs;
    const double zmax = z.maxCoeff();
    return 0.5 * mu * y.squaredNorm() + zmax + std::log((z.array() - zmax).exp().sum());
  };
  o.gradient = [As, mu, softmax](const Vector& y) -> Vector {
    return mu * y + As->transpose() * softmax(y);
  };

  Vector y = Vector::Zero(o.dim);
  for (int it = 0; it < 100; ++it) {
    const Vector s = softmax(y);
    const Vector g = mu * y + As->transpose() * s;
    if (g.norm() <= 1e-14) break;
    Matrix H = mu * Matrix::Identity(o.dim, o.dim) +
               As->transpose() * (Matrix(s.asDiagonal()) - s * s.transpose()) * *As;
    y -= H.ldlt().solve(g);
  }
  o.minimizer = y;
  return o;
}

// Sampled check of m‖x−y‖² ≤ (∇f(x)−∇f(y))ᵀ(x−y) ≤ L‖x−y‖², with relative slack 1e-9.
inline bool membership_check(const ObjectiveOracle& f, double m, double L, int samples,
                             std::uint64_t seed = 0x5eed, double radius = 10.0) {
  detail::require(samples >= 1, ErrorCode::InvalidArgument, "membership_check: samples >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-radius, radius);
  constexpr double kSlack = 1e-9;
  for (int s = 0; s < samples; ++s) {
    Vector x(f.dim), y(f.dim);
    for (int i = 0; i < f.dim; ++i) {
      x(i) = unif(rng);
      y(i) = unif(rng);
    }
    const Vector dx = x - y;
    const double dd = dx.squaredNorm();
    if (dd == 0.0) continue;
    const double inner = (f.gradient(x) - f.gradient(y)).dot(dx);
    if (inner < m * dd - kSlack * dd || inner > L * dd + kSlack * dd) return false;
  }
  return true;
}

// Random quadratic with spectrum drawn uniformly in [m, L] (endpoints included) and a
// random linear term.
inline ObjectiveOracle random_quadratic(int d, double m, double L, std::mt19937_64& rng,
                                        double p_scale = 5.0) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(m, L);
  Matrix G(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) G(i, j) = gauss(rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  const Matrix V = qr.householderQ();
  Vector lam(d);
  for (int i = 0; i < d; ++i) lam(i) = unif(rng);
  if (d >= 2) {
    lam(0) = m;
    lam(1) = L;
  }
  Vector p(d);
  for (int i = 0; i < d; ++i) p(i) = p_scale * gauss(rng);
  return quadratic(V * lam.asDiagonal() * V.transpose(), p);
}

}  // namespace lureforge::oracles
