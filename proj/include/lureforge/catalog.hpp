#pragma once

#include <string>
#include <vector>

#include "lureforge/canonical.hpp"
#include "lureforge/core.hpp"
#include "lureforge/projection.hpp"
#include "lureforge/sssys.hpp"

namespace lureforge::catalog {

struct Entry {
  std::string name;
  sssys::ReducedLTI sys;
};

inline sssys::ReducedLTI gradient_descent(double alpha, int d = 1) {
  Matrix a(1, 1), b(1, 1), c(1, 1);
  a << 1.0;
  b << -alpha;
  c << 1.0;
  return sssys::make_lti(a, b, c, d);
}

// ξ_{k+1} = (1+β)ξ_k − βξ_{k−1} − α∇f(y_k), y_k = (1+γ)ξ_k − γξ_{k−1}. γ = 0 is heavy ball,
// γ = β is Nesterov.
inline sssys::ReducedLTI two_step(double alpha, double beta, double gamma, int d = 1) {
  Matrix a(2, 2), b(2, 1), c(1, 2);
  a << 1.0 + beta, -beta, 1.0, 0.0;
  b << -alpha, 0.0;
  c << 1.0 + gamma, -gamma;
  return sssys::make_lti(a, b, c, d);
}

inline sssys::ReducedLTI heavy_ball(double m, double L, int d = 1) {
  const double sk = std::sqrt(L / m);
  const double beta = std::pow((sk - 1.0) / (sk + 1.0), 2);
  const double alpha = 4.0 / std::pow(std::sqrt(L) + std::sqrt(m), 2);
  return two_step(alpha, beta, 0.0, d);
}

inline sssys::ReducedLTI nesterov(double m, double L, int d = 1) {
  const double sk = std::sqrt(L / m);
  const double beta = (sk - 1.0) / (sk + 1.0);
  return two_step(1.0 / L, beta, beta, d);
}

inline sssys::ReducedLTI triple_momentum(double m, double L, int d = 1) {
  const double rho = 1.0 - std::sqrt(m / L);
  const double alpha = (1.0 + rho) / L;
  const double beta = rho * rho / (2.0 - rho);
  const double gamma = rho * rho / ((1.0 + rho) * (2.0 - rho));
  return two_step(alpha, beta, gamma, d);
}

namespace paper {

// Delayed-gradient algorithm of the numerical example, as printed (three decimals).
inline Matrix printed_a() {
  Matrix a(4, 4);
  a << 0.342, 2.297, 0.204, -0.157,  //
      1.0, 0.0, 0.0, 0.0,            //
      -6.583, -17.788, -2.044, 1.571,  //
      0.0, -24.838, -3.104, 2.386;
  return a;
}

inline Matrix b() {
  Matrix out(4, 1);
  out << -0.1519, 0.0, 0.0, 0.0;
  return out;
}

inline Matrix c() {
  Matrix out(1, 4);
  out << 0.0, 1.0, 0.0, 0.0;
  return out;
}

// The printed entries are rounded, which moves the integrator pole off 1 (det(A − I) ≈ −1e-3)
// and breaks the fixed-point identities. A minimum-norm change of the nonzero entries outside
// the shift row restores it; the largest change is about 2e-4.
inline Matrix restored_a() {
  const Matrix a = printed_a();
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> free = a.array() != 0.0;
  free.row(1).setConstant(false);
  return sssys::restore_integrator(a, free);
}

inline sssys::ReducedLTI system(int d = 2, bool restore = true) {
  return sssys::make_lti(restore ? restored_a() : printed_a(), b(), c(), d);
}

inline Matrix F() {
  Matrix out(2, 2);
  out << 9.88, -1.0, -1.0, 1.117;
  return out;
}

inline Vector p() {
  Vector out(2);
  out << 1.0, 5.0;
  return out;
}

inline projection::Ellipsoid ellipse() {
  Matrix W(2, 2);
  W << 1.0, -0.5, -0.5, 2.0;
  return {W, 10.0};
}

constexpr double m = 1.0;
constexpr double L = 10.0;
constexpr int ell = 9;
constexpr double reported_rate = 0.827;

inline Vector reported_chi() {
  Vector out(2);
  out << -0.029, 0.036;
  return out;
}

}  // namespace paper

inline std::vector<Entry> standard(double m = 1.0, double L = 10.0) {
  return {
      {"gradient-descent-2/(m+L)", gradient_descent(2.0 / (m + L))},
      {"gradient-descent-1/L", gradient_descent(1.0 / L)},
      {"heavy-ball", heavy_ball(m, L)},
      {"nesterov", nesterov(m, L)},
      {"triple-momentum", triple_momentum(m, L)},
      {"delayed-gradient-example", paper::system(1)},
  };
}

struct Prepared {
  canonical::CanonicalSystem canon;
  // canonical state = to_canonical · original state (n_canon × n_original)
  Matrix to_canonical;
  bool was_canonical = false;
};

// Observable form followed by canonicalization, unless the input is already canonical.
inline Prepared prepare(const sssys::ReducedLTI& sys) {
  const auto rd = sssys::relative_degree(sys);
  Prepared out;
  if (canonical::is_canonical(sys, rd.r)) {
    out.canon = canonical::canonicalize(sys);
    out.to_canonical = out.canon.from_original;
    out.was_canonical = true;
    return out;
  }
  const auto obs = sssys::observable_form(sys);
  out.canon = canonical::canonicalize(obs.sys);
  out.to_canonical = out.canon.from_original * obs.transform;
  return out;
}

}  // namespace lureforge::catalog
