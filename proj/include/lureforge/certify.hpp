#pragma once

#include <cstdio>
#include <memory>
#include <random>
#include <vector>

#include "lureforge/canonical.hpp"
#include "lureforge/core.hpp"
#include "lureforge/iqclift.hpp"
#include "lureforge/oracles.hpp"
#include "lureforge/sdp.hpp"

namespace lureforge::certify {

// Decision vector layout: upper triangle of P (row by row), Q row-major, Qt row-major, margin t.
struct VariableLayout {
  int N = 0;  // dimension of P
  int h = 0;  // ℓ + 1
  int q_offset = 0;
  int qt_offset = 0;
  int t_index = 0;
  int num_vars = 0;

  static VariableLayout make(int N, int h) {
    VariableLayout v;
    v.N = N;
    v.h = h;
    v.q_offset = N * (N + 1) / 2;
    v.qt_offset = v.q_offset + h * h;
    v.t_index = v.qt_offset + h * h;
    v.num_vars = v.t_index + 1;
    return v;
  }
  int p_index(int i, int j) const {
    if (i > j) std::swap(i, j);
    return i * N - i * (i - 1) / 2 + (j - i);
  }
  Matrix P(const Vector& y) const {
    Matrix out(N, N);
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j) out(i, j) = out(j, i) = y(p_index(i, j));
    return out;
  }
  Matrix Q(const Vector& y) const {
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        y.data() + q_offset, h, h);
  }
  Matrix Qt(const Vector& y) const {
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        y.data() + qt_offset, h, h);
  }
};

struct Settings {
  double eps_p = 1e-6;      // λ_min(P) ≥ eps_p · trace(P)/N after normalization
  double eps_l = 1e-8;      // λ_max(LMI) ≤ −eps_l after normalization
  double margin_weight = 10.0;  // P ⪰ w·t·I in the margin problem
  double q_max = 1e4;       // cap on the multiplier diagonals keeps the SDP bounded
  // Drop the ρ-weighted part (Qt = 0). The remaining multiplier holds at every single step,
  // so the certificate implies a per-step decrease for k ≥ ℓ without further assumptions.
  bool pointwise_only = false;
};

struct SDPProblem {
  VariableLayout layout;
  sdp::Problem problem;
  iqclift::AugmentedSystem aug;
  double rho = 0.0, m = 0.0, L = 0.0;
  Settings settings;
};

// Left-hand side of the rate LMI evaluated directly:
//   [A B]ᵀP[A B] − ρ² blkdiag(P, 0) + [C D]ᵀ M [C D].
inline Matrix lmi_block(const iqclift::AugmentedSystem& aug, const Matrix& P, const Matrix& M,
                        double rho) {
  const int N = aug.dim();
  detail::require(P.rows() == N && P.cols() == N, ErrorCode::DimensionMismatch,
                  "lmi_block: P must match the augmented dimension");
  detail::require(M.rows() == aug.C.rows(), ErrorCode::DimensionMismatch,
                  "lmi_block: multiplier size differs from the lifted output");
  Matrix AB(N, N + 1);
  AB << aug.A, aug.B;
  Matrix CD(aug.C.rows(), N + 1);
  CD << aug.C, aug.D;
  Matrix out = AB.transpose() * P * AB + CD.transpose() * M * CD;
  out.topLeftCorner(N, N) -= rho * rho * P;
  return detail::sym(out);
}

inline Matrix multiplier_matrix(const Matrix& Q, const Matrix& Qt, double rho, double m, double L,
                                int ell) {
  const Matrix T = iqclift::loop_transform(m, L, ell);
  const Matrix Tr = iqclift::rho_weights(rho, ell);
  return iqclift::off_diagonal_form(Q, T) + iqclift::off_diagonal_form(Tr * Qt * Tr, T);
}

inline SDPProblem assemble_lmi(const iqclift::AugmentedSystem& aug, double rho, double m, double L,
                               const Settings& settings = {}) {
  detail::require(rho > 0.0 && rho < 1.0, ErrorCode::InvalidArgument,
                  "assemble_lmi: rho must lie in (0, 1)");
  detail::require(m > 0.0 && m <= L, ErrorCode::InvalidSector, "assemble_lmi: need 0 < m <= L");
  const int N = aug.dim(), h = aug.ell + 1;
  detail::require(aug.A.cols() == N && aug.B.rows() == N && aug.C.cols() == N &&
                      aug.C.rows() == 2 * h && aug.D.rows() == 2 * h,
                  ErrorCode::DimensionMismatch, "assemble_lmi: malformed augmented system");

  SDPProblem sp;
  sp.layout = VariableLayout::make(N, h);
  sp.aug = aug;
  sp.rho = rho;
  sp.m = m;
  sp.L = L;
  sp.settings = settings;
  const auto& lay = sp.layout;
  auto& prob = sp.problem;
  prob.num_vars = lay.num_vars;
  prob.objective = Vector::Zero(lay.num_vars);
  prob.objective(lay.t_index) = 1.0;

  // Block 1: −LMI(P, Q, Qt) − t·I ⪰ 0.   Block 2: P − w·t·I ⪰ 0.
  sdp::LmiConstraint rate{Matrix::Zero(N + 1, N + 1), {}};
  sdp::LmiConstraint pos{Matrix::Zero(N, N), {}};
  const Matrix Mzero = Matrix::Zero(2 * h, 2 * h);
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) {
      Matrix E = Matrix::Zero(N, N);
      E(i, j) = E(j, i) = 1.0;
      rate.terms.emplace_back(lay.p_index(i, j), -lmi_block(aug, E, Mzero, rho));
      pos.terms.emplace_back(lay.p_index(i, j), E);
    }
  const Matrix Pzero = Matrix::Zero(N, N);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < h; ++j) {
      Matrix E = Matrix::Zero(h, h);
      E(i, j) = 1.0;
      const Matrix Z = Matrix::Zero(h, h);
      rate.terms.emplace_back(lay.q_offset + i * h + j,
                              -lmi_block(aug, Pzero, multiplier_matrix(E, Z, rho, m, L, aug.ell), rho));
      if (!settings.pointwise_only)
        rate.terms.emplace_back(lay.qt_offset + i * h + j,
                                -lmi_block(aug, Pzero, multiplier_matrix(Z, E, rho, m, L, aug.ell), rho));
    }
  rate.terms.emplace_back(lay.t_index, -Matrix::Identity(N + 1, N + 1));
  pos.terms.emplace_back(lay.t_index, -settings.margin_weight * Matrix::Identity(N, N));
  prob.lmis = {std::move(rate), std::move(pos)};

  for (int i = 0; i < N; ++i) prob.linear.push_back({{{lay.p_index(i, i), 1.0}}, 1.0});
  for (int off : {lay.q_offset, lay.qt_offset}) {
    if (off == lay.qt_offset && settings.pointwise_only) {
      // Unused variables stay in the layout; a box keeps them bounded.
      for (int k = 0; k < h * h; ++k) {
        prob.linear.push_back({{{off + k, 1.0}}, 1.0});
        prob.linear.push_back({{{off + k, -1.0}}, 1.0});
      }
      continue;
    }
    for (int i = 0; i < h; ++i) {
      sdp::LinearInequality row_sum, col_sum;
      for (int j = 0; j < h; ++j) {
        if (i != j) prob.linear.push_back({{{off + i * h + j, 1.0}}, 0.0});
        row_sum.coeffs.emplace_back(off + i * h + j, -1.0);
        col_sum.coeffs.emplace_back(off + j * h + i, -1.0);
      }
      prob.linear.push_back(row_sum);
      prob.linear.push_back(col_sum);
      prob.linear.push_back({{{off + i * h + i, 1.0}}, settings.q_max});
    }
  }
  prob.linear.push_back({{{lay.t_index, -1.0}}, 1.0});
  return sp;
}

enum class Feasibility { Feasible, Infeasible, SolverFailure };

inline const char* to_string(Feasibility f) {
  switch (f) {
    case Feasibility::Feasible: return "feasible";
    case Feasibility::Infeasible: return "infeasible";
    case Feasibility::SolverFailure: return "solver-failure";
  }
  return "unknown";
}

struct RateCertificate {
  double rho = 0.0;
  Matrix P, Q, Qt;
  int ell = 0;
  double m = 0.0, L = 0.0;
  double lmi_residual = 0.0;  // λ_max of the LMI block at the normalized (P, Q, Qt)
  double p_min_eig = 0.0;
  double p_margin_floor = 0.0;  // eps_p · trace(P)/N
};

struct FeasibilityResult {
  Feasibility status = Feasibility::SolverFailure;
  RateCertificate cert;  // populated whatever the status, for diagnostics
  sdp::Status solver_status = sdp::Status::NumericalFailure;
  double margin = 0.0;   // optimal t reported by the solver
  int iterations = 0;
};

// Recomputes every certificate condition from scratch; used both after solving and on load.
struct CertificateCheck {
  double lmi_max_eig = 0.0;
  double p_min_eig = 0.0;
  double p_floor = 0.0;
  bool cone_ok = false;
  bool ok = false;
};

inline CertificateCheck check_certificate(const RateCertificate& cert,
                                          const iqclift::AugmentedSystem& aug,
                                          const Settings& settings = {}) {
  CertificateCheck c;
  const int N = aug.dim();
  detail::require(cert.P.rows() == N && cert.Q.rows() == aug.ell + 1 && cert.ell == aug.ell,
                  ErrorCode::DimensionMismatch, "certificate does not match the augmented system");
  c.cone_ok = iqclift::is_doubly_hyperdominant(cert.Q) && iqclift::is_doubly_hyperdominant(cert.Qt);
  const Matrix M = multiplier_matrix(cert.Q, cert.Qt, cert.rho, cert.m, cert.L, cert.ell);
  c.lmi_max_eig = detail::max_eigenvalue(lmi_block(aug, cert.P, M, cert.rho));
  c.p_min_eig = detail::min_eigenvalue(cert.P);
  c.p_floor = settings.eps_p * cert.P.trace() / N;
  c.ok = c.cone_ok && c.p_min_eig >= c.p_floor && c.lmi_max_eig <= -settings.eps_l;
  return c;
}

inline FeasibilityResult solve_feasibility(const SDPProblem& sp, const sdp::Backend& backend) {
  const sdp::Result res = backend.solve(sp.problem);
  FeasibilityResult out;
  out.solver_status = res.status;
  out.iterations = res.iterations;
  out.margin = res.y.size() > sp.layout.t_index ? res.y(sp.layout.t_index) : 0.0;

  auto& cert = out.cert;
  cert.rho = sp.rho;
  cert.ell = sp.aug.ell;
  cert.m = sp.m;
  cert.L = sp.L;
  if (res.y.size() != sp.layout.num_vars || !res.y.allFinite()) {
    out.status = Feasibility::SolverFailure;
    return out;
  }
  cert.P = sp.layout.P(res.y);
  cert.Q = sp.layout.Q(res.y);
  cert.Qt = sp.settings.pointwise_only ? Matrix::Zero(sp.layout.h, sp.layout.h)
                                       : Matrix(sp.layout.Qt(res.y));
  // Interior-point iterates satisfy the cone inequalities only up to the solver tolerance;
  // clip the tiny positive off-diagonals before the independent recheck.
  for (Matrix* X : {&cert.Q, &cert.Qt})
    for (Eigen::Index i = 0; i < X->rows(); ++i)
      for (Eigen::Index j = 0; j < X->cols(); ++j)
        if (i != j && (*X)(i, j) > 0.0) (*X)(i, j) = 0.0;
  const double scale = cert.P.diagonal().maxCoeff();
  if (scale > 0.0) {
    cert.P /= scale;
    cert.Q /= scale;
    cert.Qt /= scale;
  }
  const CertificateCheck chk = check_certificate(cert, sp.aug, sp.settings);
  cert.lmi_residual = chk.lmi_max_eig;
  cert.p_min_eig = chk.p_min_eig;
  cert.p_margin_floor = chk.p_floor;
  if (scale > 0.0 && chk.ok)
    out.status = Feasibility::Feasible;
  else
    out.status = res.status == sdp::Status::Optimal || res.status == sdp::Status::Inaccurate
                     ? Feasibility::Infeasible
                     : Feasibility::SolverFailure;
  return out;
}

inline FeasibilityResult solve_feasibility(const SDPProblem& sp) {
  return solve_feasibility(sp, sdp::InteriorPointSolver{});
}

struct BisectionEntry {
  double rho = 0.0;
  Feasibility status = Feasibility::SolverFailure;
  double margin = 0.0;
  double lmi_residual = 0.0;
  int iterations = 0;
};

struct BisectionResult {
  RateCertificate cert;
  double lo = 0.0, hi = 0.0;
  std::vector<BisectionEntry> log;
};

struct BisectionSettings {
  double rho_lo = 0.5;
  double rho_hi = 0.999;
  double tol = 1e-3;
  int max_iterations = 25;
};

// Smallest certifiable ρ in the bracket. Solver failures count as "not certified" and are
// kept in the log.
inline BisectionResult bisect_rate(const iqclift::AugmentedSystem& aug, double m, double L,
                                   const BisectionSettings& bs = {},
                                   const sdp::Backend& backend = sdp::InteriorPointSolver{},
                                   const Settings& settings = {}) {
  detail::require(bs.rho_lo > 0.0 && bs.rho_lo < bs.rho_hi && bs.rho_hi < 1.0,
                  ErrorCode::InvalidArgument, "bisect_rate: need 0 < rho_lo < rho_hi < 1");
  detail::require(bs.tol > 0.0, ErrorCode::InvalidArgument, "bisect_rate: tol must be positive");
  BisectionResult out;
  auto probe = [&](double rho) {
    FeasibilityResult fr = solve_feasibility(assemble_lmi(aug, rho, m, L, settings), backend);
    out.log.push_back({rho, fr.status, fr.margin, fr.cert.lmi_residual, fr.iterations});
    return fr;
  };
  FeasibilityResult top = probe(bs.rho_hi);
  if (top.status != Feasibility::Feasible) {
    const ErrorCode code = top.status == Feasibility::SolverFailure ? ErrorCode::SolverFailure
                                                                    : ErrorCode::BracketInfeasible;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "rho_hi = %.6g is not certifiable (%s, margin %.3e, lambda_max(LMI) %.3e)",
                  bs.rho_hi, std::string(to_string(top.status)).c_str(), top.margin,
                  top.cert.lmi_residual);
    throw Error(code, buf);
  }
  out.cert = top.cert;
  double lo = bs.rho_lo, hi = bs.rho_hi;
  for (int it = 0; it < bs.max_iterations && hi - lo > bs.tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    FeasibilityResult fr = probe(mid);
    if (fr.status == Feasibility::Feasible) {
      hi = mid;
      out.cert = fr.cert;
    } else {
      lo = mid;
    }
  }
  out.lo = lo;
  out.hi = hi;
  return out;
}

struct ValidationReport {
  int trials = 0;
  double worst_ratio = 0.0;  // max over trials and k ≥ ℓ of V(x_{k+1}) / V(x_k)
  double rho_squared = 0.0;
  bool ok = false;
};

// Equilibrium of the augmented loop for a reference output y* with gradient u*.
inline Matrix augmented_equilibrium(const iqclift::AugmentedSystem& aug, const Vector& y_star,
                                    const Vector& u_star) {
  const int n = aug.canon.n, ell = aug.ell;
  Matrix x(aug.dim(), y_star.size());
  x.topRows(n) = canonical::fixed_point(aug.canon, y_star);
  for (int i = 0; i < ell; ++i) {
    x.row(n + i) = y_star.transpose();
    x.row(n + ell + i) = u_star.transpose();
  }
  return x;
}

// Simulates the augmented loop from random initial states and checks the Lyapunov decrease.
inline ValidationReport validate_certificate(const RateCertificate& cert,
                                             const iqclift::AugmentedSystem& aug,
                                             const oracles::ObjectiveOracle& oracle, int trials,
                                             int horizon = 80, std::uint64_t seed = 7) {
  detail::require(oracle.minimizer.has_value(), ErrorCode::InvalidArgument,
                  "validate_certificate needs an oracle with a known minimizer");
  detail::require(cert.P.rows() == aug.dim(), ErrorCode::DimensionMismatch,
                  "validate_certificate: P does not match the augmented system");
  ValidationReport rep;
  rep.trials = trials;
  rep.rho_squared = cert.rho * cert.rho;
  const int d = oracle.dim, n = aug.canon.n;
  const Vector ys = *oracle.minimizer;
  const Matrix xs = augmented_equilibrium(aug, ys, oracle.gradient(ys));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const int row = aug.output_row();
  for (int t = 0; t < trials; ++t) {
    Matrix x = xs;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) x(i, j) += 5.0 * unif(rng);
    double v = detail::weighted_sq_norm(cert.P, x - xs);
    for (int k = 0; k < horizon; ++k) {
      const Vector u = oracle.gradient(x.row(row).transpose());
      x = aug.A * x + aug.B * u.transpose();
      const double vn = detail::weighted_sq_norm(cert.P, x - xs);
      if (k >= aug.ell && v > 1e-20) rep.worst_ratio = std::max(rep.worst_ratio, vn / v);
      v = vn;
    }
  }
  rep.ok = rep.worst_ratio <= rep.rho_squared * (1.0 + 1e-8);
  return rep;
}

}  // namespace lureforge::certify
