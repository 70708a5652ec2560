#pragma once

#include <limits>
#include <numbers>
#include <random>

#include "lureforge/core.hpp"
#include "lureforge/projection.hpp"

namespace lftest {

using lureforge::Matrix;
using lureforge::Vector;

inline Vector uniform_vector(int d, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = u(rng);
  return v;
}

inline Matrix uniform_matrix(int r, int c, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix M(r, c);
  for (Eigen::Index i = 0; i < M.size(); ++i) M(i) = u(rng);
  return M;
}

inline Matrix random_spd(int d, double lo, double hi, std::mt19937_64& rng) {
  const Matrix G = uniform_matrix(d, d, -1.0, 1.0, rng);
  const Matrix V = Eigen::HouseholderQR<Matrix>(G).householderQ();
  const Vector lam = uniform_vector(d, lo, hi, rng);
  return V * lam.asDiagonal() * V.transpose();
}

// Nonpositive off-diagonals with row and column sums made nonnegative.
inline Matrix random_hyperdominant(int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix Q(h, h);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < h; ++j) Q(i, j) = i == j ? 0.0 : -u(rng);
  for (int i = 0; i < h; ++i) {
    const double need = std::max(-Q.row(i).sum(), -Q.col(i).sum());
    Q(i, i) = need + 0.1 * u(rng);
  }
  return Q;
}

// Nearest boundary point of a planar ellipse by scanning its parameterization and refining
// with golden-section search around the best sample.
inline Vector brute_force_ellipse(const lureforge::projection::Ellipsoid& e, const Vector& v) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(e.W);
  const Matrix R = es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                   std::sqrt(e.c);
  auto point = [&](double th) -> Vector { return R * Vector{{std::cos(th), std::sin(th)}}; };
  auto dist = [&](double th) { return (point(th) - v).squaredNorm(); };
  const int grid = 20000;
  double best = 0.0, best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid; ++i) {
    const double th = 2 * std::numbers::pi * i / grid;
    if (dist(th) < best_d) {
      best_d = dist(th);
      best = th;
    }
  }
  double a = best - 2 * std::numbers::pi / grid, b = best + 2 * std::numbers::pi / grid;
  const double phi = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 100; ++it) {
    const double c = b - phi * (b - a), d = a + phi * (b - a);
    if (dist(c) < dist(d))
      b = d;
    else
      a = c;
  }
  return point(0.5 * (a + b));
}

}  // namespace lftest
