#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lureforge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Failure categories shared by every module. The CLI maps these onto exit codes.
enum class ErrorCode {
  DimensionMismatch,
  NonKroneckerStructure,
  NoFiniteRelativeDegree,
  StructureUnreachable,
  NotObservableForm,
  RankDecisionAmbiguous,
  SingularK2,
  InvalidCone,
  InvalidSector,
  SolverFailure,
  BracketInfeasible,
  NonPositiveSchur,
  PartitionMismatch,
  NonFiniteState,
  NotConverged,
  ConvergenceFailure,
  EmptySet,
  NotPositiveDefinite,
  InvalidArgument,
  ParseError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonKroneckerStructure: return "NonKroneckerStructure";
    case ErrorCode::NoFiniteRelativeDegree: return "NoFiniteRelativeDegree";
    case ErrorCode::StructureUnreachable: return "StructureUnreachable";
    case ErrorCode::NotObservableForm: return "NotObservableForm";
    case ErrorCode::RankDecisionAmbiguous: return "RankDecisionAmbiguous";
    case ErrorCode::SingularK2: return "SingularK2";
    case ErrorCode::InvalidCone: return "InvalidCone";
    case ErrorCode::InvalidSector: return "InvalidSector";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::BracketInfeasible: return "BracketInfeasible";
    case ErrorCode::NonPositiveSchur: return "NonPositiveSchur";
    case ErrorCode::PartitionMismatch: return "PartitionMismatch";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace detail {

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) throw Error(code, what);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

// Symmetric part, used wherever round-off would otherwise leak asymmetry.
inline Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double max_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

// Squared P-weighted norm of a block-row state: trace(Eᵀ P E), i.e. vec(E)ᵀ (P ⊗ I_d) vec(E).
inline double weighted_sq_norm(const Matrix& p, const Matrix& e) {
  return (e.transpose() * p * e).trace();
}

}  // namespace detail
}  // namespace lureforge
