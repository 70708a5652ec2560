#pragma once

#include <Eigen/Cholesky>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <utility>
#include <vector>

#include "lureforge/core.hpp"

// Small dense semidefinite programming backend.
//
// Problem encoding (the contract any backend must accept):
//
//   maximize    objectiveᵀ y
//   subject to  F0_j + Σ_i y_i F_{j,i} ⪰ 0      for every LMI block j (symmetric F)
//               g_kᵀ y ≤ h_k                     for every linear row k
//
// The interior-point method below treats this as the dual of the standard-form problem
// min ⟨C, X⟩ s.t. 𝒜(X) = b, X ⪰ 0, with C_j = F0_j and A_{j,i} = −F_{j,i}, and follows an
// infeasible primal-dual path with the HKM search direction and Mehrotra's
// predictor-corrector.

namespace lureforge::sdp {

struct LmiConstraint {
  Matrix constant;
  std::vector<std::pair<int, Matrix>> terms;  // (variable index, coefficient matrix)
};

struct LinearInequality {
  std::vector<std::pair<int, double>> coeffs;
  double bound = 0.0;
};

struct Problem {
  int num_vars = 0;
  Vector objective;
  std::vector<LmiConstraint> lmis;
  std::vector<LinearInequality> linear;
};

// Inaccurate: the iteration stalled, but its best iterate meets the looser tolerances.
enum class Status { Optimal, Inaccurate, MaxIterations, NumericalFailure, Diverged };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Inaccurate: return "inaccurate";
    case Status::MaxIterations: return "max-iterations";
    case Status::NumericalFailure: return "numerical-failure";
    case Status::Diverged: return "diverged";
  }
  return "unknown";
}

struct Result {
  Status status = Status::NumericalFailure;
  Vector y;
  double primal_objective = 0.0;  // upper bound on objectiveᵀy when converged
  double dual_objective = 0.0;    // objectiveᵀy
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double relative_gap = 0.0;
  int iterations = 0;
};

struct Settings {
  int max_iterations = 120;
  double gap_tol = 1e-9;
  double feas_tol = 1e-8;
  double loose_tol = 1e-6;
  int stall_iterations = 8;
  double divergence_bound = 1e12;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual Result solve(const Problem& prob) const = 0;
};

inline void check_problem(const Problem& prob) {
  detail::require(prob.objective.size() == prob.num_vars, ErrorCode::DimensionMismatch,
                  "sdp: objective length differs from num_vars");
  for (const auto& lmi : prob.lmis) {
    detail::require(lmi.constant.rows() == lmi.constant.cols(), ErrorCode::DimensionMismatch,
                    "sdp: LMI constant must be square");
    for (const auto& [idx, F] : lmi.terms) {
      detail::require(idx >= 0 && idx < prob.num_vars, ErrorCode::DimensionMismatch,
                      "sdp: LMI term index out of range");
      detail::require(F.rows() == lmi.constant.rows() && F.cols() == lmi.constant.cols(),
                      ErrorCode::DimensionMismatch, "sdp: LMI coefficient has wrong size");
    }
  }
  for (const auto& row : prob.linear)
    for (const auto& [idx, v] : row.coeffs)
      detail::require(idx >= 0 && idx < prob.num_vars, ErrorCode::DimensionMismatch,
                      "sdp: linear coefficient index out of range");
}

// Slack of every constraint at y: F0 + Σ y_i F_i per block, h − G y for the linear rows.
inline std::vector<Matrix> lmi_values(const Problem& prob, const Vector& y) {
  std::vector<Matrix> out;
  out.reserve(prob.lmis.size());
  for (const auto& lmi : prob.lmis) {
    Matrix S = lmi.constant;
    for (const auto& [idx, F] : lmi.terms) S += y(idx) * F;
    out.push_back(detail::sym(S));
  }
  return out;
}

inline Vector linear_slacks(const Problem& prob, const Vector& y) {
  Vector s(prob.linear.size());
  for (size_t k = 0; k < prob.linear.size(); ++k) {
    double v = prob.linear[k].bound;
    for (const auto& [idx, c] : prob.linear[k].coeffs) v -= c * y(idx);
    s(static_cast<Eigen::Index>(k)) = v;
  }
  return s;
}

class InteriorPointSolver final : public Backend {
 public:
  explicit InteriorPointSolver(Settings settings = {}) : settings_(settings) {}

  Result solve(const Problem& prob) const override;

 private:
  Settings settings_;
};

namespace ipm_detail {

// One dense block in standard form, coefficients flattened so that 𝒜 and the Schur
// complement become matrix products.
struct Block {
  int n = 0;
  Matrix C;
  std::vector<int> vars;  // variables with a nonzero coefficient in this block
  Matrix Aflat;           // vars.size() × n², row t = vec(A_{vars[t]})
};

struct LpPart {
  Vector c;  // h
  Matrix G;  // rows × num_vars (A_i for the LP cone is column i)
};

inline double max_step(const Matrix& X, const Matrix& dX) {
  Eigen::LLT<Matrix> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  const Matrix Linv = llt.matrixL().solve(Matrix::Identity(X.rows(), X.cols()));
  const double lmin = detail::min_eigenvalue(Linv * dX * Linv.transpose());
  return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

inline double max_step_lp(const Vector& x, const Vector& dx) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
  return a;
}

inline Vector flat(const Matrix& M) { return Eigen::Map<const Vector>(M.data(), M.size()); }

}  // namespace ipm_detail

inline Result InteriorPointSolver::solve(const Problem& prob) const {
  using namespace ipm_detail;
  check_problem(prob);
  const int m = prob.num_vars;
  const Vector& b = prob.objective;

  std::vector<Block> blocks;
  for (const auto& lmi : prob.lmis) {
    Block blk;
    blk.n = static_cast<int>(lmi.constant.rows());
    blk.C = detail::sym(lmi.constant);
    std::vector<Matrix> acc(m);
    std::vector<bool> used(m, false);
    for (const auto& [idx, F] : lmi.terms) {
      if (!used[idx]) acc[idx] = Matrix::Zero(blk.n, blk.n);
      used[idx] = true;
      acc[idx] -= detail::sym(F);
    }
    for (int i = 0; i < m; ++i)
      if (used[i]) blk.vars.push_back(i);
    blk.Aflat.resize(static_cast<Eigen::Index>(blk.vars.size()), blk.n * blk.n);
    for (size_t t = 0; t < blk.vars.size(); ++t)
      blk.Aflat.row(static_cast<Eigen::Index>(t)) = flat(acc[blk.vars[t]]).transpose();
    blocks.push_back(std::move(blk));
  }
  LpPart lp;
  const auto nl = static_cast<Eigen::Index>(prob.linear.size());
  lp.c.resize(nl);
  lp.G = Matrix::Zero(nl, m);
  for (Eigen::Index k = 0; k < nl; ++k) {
    lp.c(k) = prob.linear[k].bound;
    for (const auto& [idx, v] : prob.linear[k].coeffs) lp.G(k, idx) += v;
  }

  // 𝒜(X, x) and 𝒜ᵀ(y).
  auto apply_A = [&](const std::vector<Matrix>& Xs, const Vector& x) {
    Vector out = lp.G.transpose() * x;
    for (size_t j = 0; j < blocks.size(); ++j) {
      const Vector v = blocks[j].Aflat * flat(Xs[j]);
      for (size_t t = 0; t < blocks[j].vars.size(); ++t) out(blocks[j].vars[t]) += v(t);
    }
    return out;
  };
  auto apply_At = [&](const Vector& y, std::vector<Matrix>& Ys, Vector& ylp) {
    Ys.resize(blocks.size());
    for (size_t j = 0; j < blocks.size(); ++j) {
      Vector yy(blocks[j].vars.size());
      for (size_t t = 0; t < blocks[j].vars.size(); ++t) yy(t) = y(blocks[j].vars[t]);
      const Vector v = blocks[j].Aflat.transpose() * yy;
      Ys[j] = Eigen::Map<const Matrix>(v.data(), blocks[j].n, blocks[j].n);
    }
    ylp = lp.G * y;
  };

  // Starting point scaled to the data.
  const double b_norm = b.norm();
  std::vector<Matrix> X(blocks.size()), Z(blocks.size());
  for (size_t j = 0; j < blocks.size(); ++j) {
    const auto& blk = blocks[j];
    double xi = std::max(10.0, std::sqrt(static_cast<double>(blk.n)));
    double eta = xi;
    for (Eigen::Index t = 0; t < blk.Aflat.rows(); ++t) {
      const double an = blk.Aflat.row(t).norm();
      xi = std::max(xi, blk.n * (1.0 + std::abs(b(blk.vars[t]))) / (1.0 + an));
      eta = std::max(eta, an);
    }
    eta = std::max(eta, blk.C.norm());
    eta = (1.0 + eta) / std::sqrt(static_cast<double>(blk.n));
    X[j] = xi * Matrix::Identity(blk.n, blk.n);
    Z[j] = eta * Matrix::Identity(blk.n, blk.n);
  }
  Vector xlp = Vector::Constant(nl, 10.0), zlp = Vector::Constant(nl, 10.0);
  for (Eigen::Index k = 0; k < nl; ++k) {
    const double gn = lp.G.row(k).norm();
    xlp(k) = std::max(10.0, (1.0 + b_norm) / (1.0 + gn));
    zlp(k) = std::max(10.0, 1.0 + std::max(gn, std::abs(lp.c(k))));
  }
  Vector y = Vector::Zero(m);

  double nu = static_cast<double>(nl);
  double c_norm = lp.c.squaredNorm();
  for (const auto& blk : blocks) {
    nu += blk.n;
    c_norm += blk.C.squaredNorm();
  }
  c_norm = std::sqrt(c_norm);

  Result res, best;
  res.y = y;
  double best_merit = std::numeric_limits<double>::infinity();
  int since_best = 0;
  // Exits other than convergence hand back the best iterate seen so far.
  auto finish = [&](Status fallback) {
    best.iterations = res.iterations;
    best.status = best_merit <= settings_.loose_tol ? Status::Inaccurate : fallback;
    if (best.y.size() == 0) best = res, best.status = fallback;
    return best;
  };
  for (int iter = 0; iter < settings_.max_iterations; ++iter) {
    res.iterations = iter;
    // Residuals.
    std::vector<Matrix> Aty;
    Vector Aty_lp;
    apply_At(y, Aty, Aty_lp);
    std::vector<Matrix> Rd(blocks.size());
    double rd_norm2 = 0.0;
    for (size_t j = 0; j < blocks.size(); ++j) {
      Rd[j] = blocks[j].C - Aty[j] - Z[j];
      rd_norm2 += Rd[j].squaredNorm();
    }
    const Vector rd_lp = lp.c - Aty_lp - zlp;
    rd_norm2 += rd_lp.squaredNorm();
    const Vector rp = b - apply_A(X, xlp);

    double pobj = lp.c.dot(xlp), gap = xlp.dot(zlp);
    for (size_t j = 0; j < blocks.size(); ++j) {
      pobj += (blocks[j].C.array() * X[j].array()).sum();
      gap += (X[j].array() * Z[j].array()).sum();
    }
    const double dobj = b.dot(y);
    const double mu = gap / nu;
    res.y = y;
    res.primal_objective = pobj;
    res.dual_objective = dobj;
    res.primal_infeasibility = rp.norm() / (1.0 + b_norm);
    res.dual_infeasibility = std::sqrt(rd_norm2) / (1.0 + c_norm);
    res.relative_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double complementarity = gap / (1.0 + std::abs(pobj) + std::abs(dobj));
    if (std::getenv("LF_SDP_TRACE"))
      std::fprintf(stderr, "%3d pobj %.9e dobj %.9e gap %.2e pinf %.2e dinf %.2e\n", iter, pobj, dobj,
                   complementarity, res.primal_infeasibility, res.dual_infeasibility);
    if (std::max(res.relative_gap, complementarity) <= settings_.gap_tol &&
        res.primal_infeasibility <= settings_.feas_tol &&
        res.dual_infeasibility <= settings_.feas_tol) {
      res.status = Status::Optimal;
      return res;
    }
    if (!y.allFinite() || y.norm() > settings_.divergence_bound) return finish(Status::Diverged);
    const double merit = std::max({res.relative_gap, complementarity, res.primal_infeasibility,
                                   res.dual_infeasibility});
    if (merit < best_merit) {
      best_merit = merit;
      best = res;
      since_best = 0;
    } else if (++since_best >= settings_.stall_iterations) {
      return finish(Status::NumericalFailure);
    }

    // Schur complement M_ik = ⟨A_i, X A_k Z⁻¹⟩ (+ LP part Gᵀ diag(x/z) G).
    std::vector<Matrix> Zinv(blocks.size());
    Matrix M = lp.G.transpose() * (xlp.cwiseQuotient(zlp)).asDiagonal() * lp.G;
    bool ok = true;
    for (size_t j = 0; j < blocks.size() && ok; ++j) {
      const auto& blk = blocks[j];
      Eigen::LLT<Matrix> zl(Z[j]);
      if (zl.info() != Eigen::Success) {
        ok = false;
        break;
      }
      Zinv[j] = zl.solve(Matrix::Identity(blk.n, blk.n));
      Zinv[j] = detail::sym(Zinv[j]);
      const auto nv = static_cast<Eigen::Index>(blk.vars.size());
      Matrix W(nv, blk.n * blk.n);
      for (Eigen::Index t = 0; t < nv; ++t) {
        const Eigen::Map<const Matrix> At(blk.Aflat.row(t).data(), blk.n, blk.n);
        // Aflat rows are contiguous in a column-major matrix only through a copy.
        const Matrix Atm = Eigen::Map<const Matrix>(Vector(blk.Aflat.row(t).transpose()).data(),
                                                    blk.n, blk.n);
        (void)At;
        const Matrix Wt = X[j] * Atm * Zinv[j];
        W.row(t) = flat(Wt).transpose();
      }
      const Matrix Mb = blk.Aflat * W.transpose();
      for (Eigen::Index s = 0; s < nv; ++s)
        for (Eigen::Index t = 0; t < nv; ++t) M(blk.vars[s], blk.vars[t]) += Mb(s, t);
    }
    if (!ok) {
      return finish(Status::NumericalFailure);
    }
    M = detail::sym(M);
    Eigen::LDLT<Matrix> schur(M);
    if (schur.info() != Eigen::Success) {
      return finish(Status::NumericalFailure);
    }

    // Search direction for centering targets R_c (per block) and r_c (LP):
    //   ΔX Z + X ΔZ = R_c,  ΔZ = R_d − 𝒜ᵀΔy,  𝒜(ΔX) = r_p.
    struct Direction {
      std::vector<Matrix> dX, dZ;
      Vector dx, dz, dy;
    };
    auto direction = [&](const std::vector<Matrix>& Rc, const Vector& rc) {
      Direction dir;
      std::vector<Matrix> T1(blocks.size());
      for (size_t j = 0; j < blocks.size(); ++j) T1[j] = (Rc[j] - X[j] * Rd[j]) * Zinv[j];
      const Vector t1_lp = (rc - xlp.cwiseProduct(rd_lp)).cwiseQuotient(zlp);
      const Vector rhs = rp - apply_A(T1, t1_lp);
      dir.dy = schur.solve(rhs);
      std::vector<Matrix> Atdy;
      Vector Atdy_lp;
      apply_At(dir.dy, Atdy, Atdy_lp);
      dir.dZ.resize(blocks.size());
      dir.dX.resize(blocks.size());
      for (size_t j = 0; j < blocks.size(); ++j) {
        dir.dZ[j] = detail::sym(Rd[j] - Atdy[j]);
        dir.dX[j] = detail::sym((Rc[j] - X[j] * dir.dZ[j]) * Zinv[j]);
      }
      dir.dz = rd_lp - Atdy_lp;
      dir.dx = (rc - xlp.cwiseProduct(dir.dz)).cwiseQuotient(zlp);
      return dir;
    };
    auto step_lengths = [&](const Direction& dir) {
      double ap = max_step_lp(xlp, dir.dx), ad = max_step_lp(zlp, dir.dz);
      for (size_t j = 0; j < blocks.size(); ++j) {
        ap = std::min(ap, max_step(X[j], dir.dX[j]));
        ad = std::min(ad, max_step(Z[j], dir.dZ[j]));
      }
      return std::pair{ap, ad};
    };

    // Predictor.
    std::vector<Matrix> Rc(blocks.size());
    for (size_t j = 0; j < blocks.size(); ++j) Rc[j] = -X[j] * Z[j];
    const Direction pred = direction(Rc, -xlp.cwiseProduct(zlp));
    auto [ap, ad] = step_lengths(pred);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double gap_aff = (xlp + ap * pred.dx).dot(zlp + ad * pred.dz);
    for (size_t j = 0; j < blocks.size(); ++j)
      gap_aff += ((X[j] + ap * pred.dX[j]).array() * (Z[j] + ad * pred.dZ[j]).array()).sum();
    const double ratio = std::clamp(gap_aff / gap, 0.0, 1.0);
    double sigma = ratio * ratio * ratio;
    if (std::min(ap, ad) < 0.1) sigma = std::max(sigma, 0.3);

    // Corrector.
    for (size_t j = 0; j < blocks.size(); ++j)
      Rc[j] = sigma * mu * Matrix::Identity(blocks[j].n, blocks[j].n) - X[j] * Z[j] -
              pred.dX[j] * pred.dZ[j];
    const Vector rc = Vector::Constant(nl, sigma * mu) - xlp.cwiseProduct(zlp) -
                      pred.dx.cwiseProduct(pred.dz);
    const Direction corr = direction(Rc, rc);
    auto [cp, cd] = step_lengths(corr);
    const double frac = 0.9 + 0.09 * std::min(std::min(1.0, cp), std::min(1.0, cd));
    cp = std::min(1.0, frac * cp);
    cd = std::min(1.0, frac * cd);
    if (!(cp > 1e-14 && cd > 1e-14)) {
      return finish(Status::NumericalFailure);
    }
    for (size_t j = 0; j < blocks.size(); ++j) {
      X[j] = detail::sym(X[j] + cp * corr.dX[j]);
      Z[j] = detail::sym(Z[j] + cd * corr.dZ[j]);
    }
    xlp += cp * corr.dx;
    zlp += cd * corr.dz;
    y += cd * corr.dy;
  }
  res.iterations = settings_.max_iterations;
  return finish(Status::MaxIterations);
}

}  // namespace lureforge::sdp
