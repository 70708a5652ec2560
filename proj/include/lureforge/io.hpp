#pragma once

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "lureforge/canonical.hpp"
#include "lureforge/catalog.hpp"
#include "lureforge/certify.hpp"
#include "lureforge/oracles.hpp"
#include "lureforge/projection.hpp"
#include "lureforge/sssys.hpp"

// Config schema, version 1 (YAML):
//
//   version: 1
//   system:                      # either explicit matrices ...
//     n: 4                       # optional; needed only when A is given as a flat row-major list
//     d: 2
//     A: [[...], ...]            # n×n (nested) or n² entries row-major
//     B: [...]                   # n entries, or n×1 nested
//     C: [...]                   # n entries, or 1×n nested
//     restore_integrator: false  # nudge A so that it has an exact eigenvalue at 1
//   # ... or a preset: {preset: delayed-gradient-example | gradient-descent | heavy-ball |
//   #                    nesterov | triple-momentum, d: 2, alpha: 0.1}
//   sector: {m: 1, L: 10}
//   lift: {ell: 9}
//   bisection: {lo: 0.5, hi: 0.999, tol: 1e-3, max_iterations: 25}
//   multiplier: {pointwise_only: false}   # true drops the rho-weighted multiplier part
//   constraint: {kind: ellipsoid, W: [[1, -0.5], [-0.5, 2]], c: 10}
//               # none | box {lo, hi} | halfspace {a, b} | ball {center, radius}
//               # | ellipsoid {W, c} | polyhedron {A, b}
//   oracle: {kind: quadratic, F: [[...]], p: [...]}   # or {kind: logsumexp, A, b, mu}
//   horizon: 150
//   trials: 10
//   seed: 1
//   x0: [[...], ...]             # optional n×d initial state of the given realization
//   out: results
//   certificate: cert.yaml       # optional; reused by synthesize/run instead of re-certifying

namespace lureforge::io {

constexpr int kSchemaVersion = 1;

struct RunConfig {
  std::string source = "<inline>";
  std::filesystem::path base_dir = ".";
  sssys::ReducedLTI system;
  std::string system_label = "custom";
  double m = 1.0, L = 10.0;
  int ell = 0;
  certify::BisectionSettings bisection;
  certify::Settings certify;
  projection::ConstraintSet constraint = projection::Unconstrained{};
  std::optional<oracles::ObjectiveOracle> oracle;
  int horizon = 150;
  int trials = 10;
  std::uint64_t seed = 1;
  std::optional<Matrix> x0;
  std::string out = "out";
  std::optional<std::filesystem::path> certificate;
};

namespace detail_ {

class Parser {
 public:
  explicit Parser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& field,
                         const std::string& msg) const {
    std::ostringstream os;
    os << source_;
    if (node.IsDefined() && node.Mark().line >= 0)
      os << ":" << node.Mark().line + 1 << ":" << node.Mark().column + 1;
    os << ": " << field << ": " << msg;
    throw Error(ErrorCode::ParseError, os.str());
  }

  double scalar(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected a number");
    try {
      return node.as<double>();
    } catch (const YAML::Exception&) {
      fail(node, field, "'" + node.Scalar() + "' is not a number");
    }
  }

  int integer(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected an integer");
    try {
      return node.as<int>();
    } catch (const YAML::Exception&) {
      fail(node, field, "'" + node.Scalar() + "' is not an integer");
    }
  }

  Vector vector(const YAML::Node& node, const std::string& field) const {
    if (!node.IsSequence()) fail(node, field, "expected a list of numbers");
    Vector v(node.size());
    for (std::size_t i = 0; i < node.size(); ++i) {
      const YAML::Node item = node[i];
      if (item.IsSequence()) {
        if (item.size() != 1) fail(item, field, "expected a flat list or single-entry rows");
        v(static_cast<Eigen::Index>(i)) = scalar(item[0], field);
      } else {
        v(static_cast<Eigen::Index>(i)) = scalar(item, field);
      }
    }
    return v;
  }

  // Nested rows, or a flat row-major list when `rows` is known.
  Matrix matrix(const YAML::Node& node, const std::string& field, int rows = -1,
                int cols = -1) const {
    if (!node.IsSequence() || node.size() == 0) fail(node, field, "expected a non-empty list");
    if (node[0].IsSequence()) {
      const auto r = node.size();
      const auto c = node[0].size();
      Matrix M(r, c);
      for (std::size_t i = 0; i < r; ++i) {
        const YAML::Node row = node[i];
        if (!row.IsSequence())
          fail(row, field, "row " + std::to_string(i + 1) + " is not a list");
        if (row.size() != c)
          fail(row, field, "row " + std::to_string(i + 1) + " has " + std::to_string(row.size()) +
                               " entries, expected " + std::to_string(c));
        for (std::size_t j = 0; j < c; ++j)
          M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = scalar(row[j], field);
      }
      if ((rows >= 0 && M.rows() != rows) || (cols >= 0 && M.cols() != cols))
        fail(node, field, "has shape " + std::to_string(M.rows()) + "×" +
                              std::to_string(M.cols()) + ", expected " + std::to_string(rows) +
                              "×" + std::to_string(cols));
      return M;
    }
    const Vector flat = vector(node, field);
    if (rows < 0 && cols < 0) fail(node, field, "flat list needs the dimension n");
    const int r = rows >= 0 ? rows : static_cast<int>(flat.size()) / cols;
    const int c = cols >= 0 ? cols : static_cast<int>(flat.size()) / rows;
    if (static_cast<long>(r) * c != flat.size())
      fail(node, field, "has " + std::to_string(flat.size()) + " entries, expected " +
                            std::to_string(r * c));
    Matrix M(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) M(i, j) = flat(i * c + j);
    return M;
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

inline void check_keys(const Parser& ps, const YAML::Node& node, const std::string& field,
                       std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) ps.fail(node, field, "expected a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) ps.fail(kv.first, field, "unknown key '" + key + "'");
  }
}

inline void parse_system(const Parser& ps, const YAML::Node& node, RunConfig& cfg) {
  if (!node) ps.fail(node, "system", "missing section");
  check_keys(ps, node, "system",
             {"n", "d", "A", "B", "C", "restore_integrator", "preset", "alpha", "m", "L"});
  const int d = node["d"] ? ps.integer(node["d"], "system.d") : 1;
  if (d < 1) ps.fail(node["d"], "system.d", "must be >= 1");
  if (node["preset"]) {
    const std::string preset = node["preset"].as<std::string>();
    cfg.system_label = preset;
    if (preset == "delayed-gradient-example") {
      cfg.system = catalog::paper::system(d);
    } else if (preset == "gradient-descent") {
      const double alpha =
          node["alpha"] ? ps.scalar(node["alpha"], "system.alpha") : 2.0 / (cfg.m + cfg.L);
      cfg.system = catalog::gradient_descent(alpha, d);
    } else if (preset == "heavy-ball") {
      cfg.system = catalog::heavy_ball(cfg.m, cfg.L, d);
    } else if (preset == "nesterov") {
      cfg.system = catalog::nesterov(cfg.m, cfg.L, d);
    } else if (preset == "triple-momentum") {
      cfg.system = catalog::triple_momentum(cfg.m, cfg.L, d);
    } else {
      ps.fail(node["preset"], "system.preset", "unknown preset '" + preset + "'");
    }
    return;
  }
  for (const char* key : {"A", "B", "C"})
    if (!node[key]) ps.fail(node, std::string("system.") + key, "missing");
  const int n_hint = node["n"] ? ps.integer(node["n"], "system.n") : -1;
  Matrix A = ps.matrix(node["A"], "system.A", n_hint, n_hint);
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n) ps.fail(node["A"], "system.A", "must be square");
  if (n_hint >= 0 && n_hint != n) ps.fail(node["n"], "system.n", "disagrees with A");
  const Vector b = ps.vector(node["B"], "system.B");
  if (b.size() != n)
    ps.fail(node["B"], "system.B", "has " + std::to_string(b.size()) + " entries, expected " +
                                       std::to_string(n));
  Vector c;
  if (node["C"].IsSequence() && node["C"].size() == 1 && node["C"][0].IsSequence())
    c = ps.vector(node["C"][0], "system.C");
  else
    c = ps.vector(node["C"], "system.C");
  if (c.size() != n)
    ps.fail(node["C"], "system.C", "has " + std::to_string(c.size()) + " entries, expected " +
                                       std::to_string(n));
  if (node["restore_integrator"] && node["restore_integrator"].as<bool>()) {
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> free = A.array() != 0.0;
    // Rows that are exact unit shifts stay untouched.
    for (int i = 0; i < n; ++i) {
      const RowVector row = A.row(i);
      if ((row.array() == 0.0 || row.array() == 1.0).all() && (row.array() == 1.0).count() == 1)
        free.row(i).setConstant(false);
    }
    A = sssys::restore_integrator(A, free);
  }
  cfg.system = sssys::make_lti(A, b, c.transpose(), d);
}

inline projection::ConstraintSet parse_constraint(const Parser& ps, const YAML::Node& node, int d) {
  if (!node) return projection::Unconstrained{};
  const std::string kind = node["kind"] ? node["kind"].as<std::string>() : "";
  projection::ConstraintSet set;
  if (kind == "none") {
    set = projection::Unconstrained{};
  } else if (kind == "box") {
    check_keys(ps, node, "constraint", {"kind", "lo", "hi"});
    set = projection::Box{ps.vector(node["lo"], "constraint.lo"),
                          ps.vector(node["hi"], "constraint.hi")};
  } else if (kind == "halfspace") {
    check_keys(ps, node, "constraint", {"kind", "a", "b"});
    set = projection::Halfspace{ps.vector(node["a"], "constraint.a"),
                                ps.scalar(node["b"], "constraint.b")};
  } else if (kind == "ball") {
    check_keys(ps, node, "constraint", {"kind", "center", "radius"});
    set = projection::Ball{ps.vector(node["center"], "constraint.center"),
                           ps.scalar(node["radius"], "constraint.radius")};
  } else if (kind == "ellipsoid") {
    check_keys(ps, node, "constraint", {"kind", "W", "c"});
    set = projection::Ellipsoid{ps.matrix(node["W"], "constraint.W", d, d),
                                ps.scalar(node["c"], "constraint.c")};
  } else if (kind == "polyhedron") {
    check_keys(ps, node, "constraint", {"kind", "A", "b"});
    set = projection::Polyhedron{ps.matrix(node["A"], "constraint.A", -1, d),
                                 ps.vector(node["b"], "constraint.b")};
  } else {
    ps.fail(node["kind"].IsDefined() ? node["kind"] : node, "constraint.kind",
            "expected one of none, box, halfspace, ball, ellipsoid, polyhedron");
  }
  try {
    projection::validate(set, d);
  } catch (const Error& e) {
    ps.fail(node, "constraint", e.what());
  }
  return set;
}

inline oracles::ObjectiveOracle parse_oracle(const Parser& ps, const YAML::Node& node, int d) {
  const std::string kind = node["kind"] ? node["kind"].as<std::string>() : "";
  try {
    if (kind == "quadratic") {
      check_keys(ps, node, "oracle", {"kind", "F", "p"});
      return oracles::quadratic(ps.matrix(node["F"], "oracle.F", d, d),
                                ps.vector(node["p"], "oracle.p"));
    }
    if (kind == "logsumexp") {
      check_keys(ps, node, "oracle", {"kind", "A", "b", "mu"});
      return oracles::regularized_logsumexp(ps.matrix(node["A"], "oracle.A", -1, d),
                                            ps.vector(node["b"], "oracle.b"),
                                            ps.scalar(node["mu"], "oracle.mu"));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw;
    ps.fail(node, "oracle", e.what());
  }
  ps.fail(node["kind"].IsDefined() ? node["kind"] : node, "oracle.kind",
          "expected quadratic or logsumexp");
}

}  // namespace detail_

inline RunConfig parse_config(const YAML::Node& root, const std::string& source = "<inline>") {
  detail_::Parser ps(source);
  RunConfig cfg;
  cfg.source = source;
  if (!root.IsMap()) ps.fail(root, "<root>", "expected a mapping");
  detail_::check_keys(ps, root, "<root>",
                      {"version", "system", "sector", "lift", "bisection", "multiplier", "constraint", "oracle",
                       "horizon", "trials", "seed", "x0", "out", "certificate"});
  if (!root["version"]) ps.fail(root, "version", "missing schema version");
  if (ps.integer(root["version"], "version") != kSchemaVersion)
    ps.fail(root["version"], "version",
            "unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")");
  if (const auto s = root["sector"]) {
    detail_::check_keys(ps, s, "sector", {"m", "L"});
    cfg.m = ps.scalar(s["m"], "sector.m");
    cfg.L = ps.scalar(s["L"], "sector.L");
    if (!(cfg.m > 0.0 && cfg.m <= cfg.L)) ps.fail(s, "sector", "need 0 < m <= L");
  }
  try {
    detail_::parse_system(ps, root["system"], cfg);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw;
    ps.fail(root["system"], "system", e.what());
  }
  const int d = cfg.system.d;
  if (const auto l = root["lift"]) {
    detail_::check_keys(ps, l, "lift", {"ell"});
    cfg.ell = ps.integer(l["ell"], "lift.ell");
    if (cfg.ell < 0) ps.fail(l["ell"], "lift.ell", "must be >= 0");
  }
  if (const auto b = root["bisection"]) {
    detail_::check_keys(ps, b, "bisection", {"lo", "hi", "tol", "max_iterations"});
    if (b["lo"]) cfg.bisection.rho_lo = ps.scalar(b["lo"], "bisection.lo");
    if (b["hi"]) cfg.bisection.rho_hi = ps.scalar(b["hi"], "bisection.hi");
    if (b["tol"]) cfg.bisection.tol = ps.scalar(b["tol"], "bisection.tol");
    if (b["max_iterations"])
      cfg.bisection.max_iterations = ps.integer(b["max_iterations"], "bisection.max_iterations");
    if (!(cfg.bisection.rho_lo > 0.0 && cfg.bisection.rho_lo < cfg.bisection.rho_hi &&
          cfg.bisection.rho_hi < 1.0))
      ps.fail(b, "bisection", "need 0 < lo < hi < 1");
  }
  if (const auto mu = root["multiplier"]) {
    detail_::check_keys(ps, mu, "multiplier", {"pointwise_only"});
    if (mu["pointwise_only"]) {
      try {
        cfg.certify.pointwise_only = mu["pointwise_only"].as<bool>();
      } catch (const YAML::Exception&) {
        ps.fail(mu["pointwise_only"], "multiplier.pointwise_only", "expected true or false");
      }
    }
  }
  cfg.constraint = detail_::parse_constraint(ps, root["constraint"], d);
  if (root["oracle"]) cfg.oracle = detail_::parse_oracle(ps, root["oracle"], d);
  if (root["horizon"]) {
    cfg.horizon = ps.integer(root["horizon"], "horizon");
    if (cfg.horizon < 0) ps.fail(root["horizon"], "horizon", "must be >= 0");
  }
  if (root["trials"]) {
    cfg.trials = ps.integer(root["trials"], "trials");
    if (cfg.trials < 1) ps.fail(root["trials"], "trials", "must be >= 1");
  }
  if (root["seed"]) cfg.seed = static_cast<std::uint64_t>(ps.integer(root["seed"], "seed"));
  if (root["x0"]) {
    const Matrix x0 = ps.matrix(root["x0"], "x0", cfg.system.order(), d);
    cfg.x0 = x0;
  }
  if (root["out"]) cfg.out = root["out"].as<std::string>();
  if (root["certificate"]) cfg.certificate = root["certificate"].as<std::string>();
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::BadFile&) {
    throw Error(ErrorCode::ParseError, path.string() + ": cannot open file");
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(e.mark.line + 1) +
                                           ":" + std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  RunConfig cfg = parse_config(root, path.string());
  cfg.base_dir = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
  if (cfg.certificate && cfg.certificate->is_relative())
    cfg.certificate = cfg.base_dir / *cfg.certificate;
  return cfg;
}

// ---------------------------------------------------------------------------------------------
// Serialization

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void emit_matrix(YAML::Emitter& out, const Matrix& M) {
  out << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    out << YAML::Flow << YAML::BeginSeq;
    for (Eigen::Index j = 0; j < M.cols(); ++j) out << M(i, j);
    out << YAML::EndSeq;
  }
  out << YAML::EndSeq;
}

inline Matrix read_matrix(const YAML::Node& node, const std::string& field,
                          const std::string& source) {
  return detail_::Parser(source).matrix(node, field);
}

// FNV-1a over the canonical realization; ties a certificate to the system it was made for.
inline std::string system_hash(const canonical::CanonicalSystem& cs) {
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&h](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ull;
    }
  };
  char buf[32];
  auto feed_num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.12e;", v);
    feed(buf);
  };
  feed("r=" + std::to_string(cs.r) + ";n=" + std::to_string(cs.n) + ";");
  feed_num(cs.g);
  const Matrix a = cs.a();
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) feed_num(a(i, j));
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string certificate_to_yaml(const certify::RateCertificate& cert,
                                       const std::string& hash) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "format" << YAML::Value << "lureforge-certificate";
  out << YAML::Key << "version" << YAML::Value << kSchemaVersion;
  out << YAML::Key << "system_hash" << YAML::Value << hash;
  out << YAML::Key << "rho" << YAML::Value << cert.rho;
  out << YAML::Key << "ell" << YAML::Value << cert.ell;
  out << YAML::Key << "m" << YAML::Value << cert.m;
  out << YAML::Key << "L" << YAML::Value << cert.L;
  out << YAML::Key << "residuals" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "lmi_max_eig" << YAML::Value << cert.lmi_residual;
  out << YAML::Key << "p_min_eig" << YAML::Value << cert.p_min_eig;
  out << YAML::Key << "p_floor" << YAML::Value << cert.p_margin_floor;
  out << YAML::EndMap;
  out << YAML::Key << "P" << YAML::Value;
  emit_matrix(out, cert.P);
  out << YAML::Key << "Q" << YAML::Value;
  emit_matrix(out, cert.Q);
  out << YAML::Key << "Qt" << YAML::Value;
  emit_matrix(out, cert.Qt);
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

struct LoadedCertificate {
  certify::RateCertificate cert;
  std::string system_hash;
};

inline LoadedCertificate certificate_from_yaml(const YAML::Node& root, const std::string& source) {
  detail_::Parser ps(source);
  if (!root.IsMap() || !root["format"] || root["format"].as<std::string>() != "lureforge-certificate")
    ps.fail(root, "format", "not a lureforge certificate");
  if (ps.integer(root["version"], "version") != kSchemaVersion)
    ps.fail(root["version"], "version", "unsupported certificate version");
  LoadedCertificate lc;
  lc.system_hash = root["system_hash"].as<std::string>();
  auto& c = lc.cert;
  c.rho = ps.scalar(root["rho"], "rho");
  c.ell = ps.integer(root["ell"], "ell");
  c.m = ps.scalar(root["m"], "m");
  c.L = ps.scalar(root["L"], "L");
  c.P = ps.matrix(root["P"], "P");
  c.Q = ps.matrix(root["Q"], "Q");
  c.Qt = ps.matrix(root["Qt"], "Qt");
  if (const auto r = root["residuals"]) {
    c.lmi_residual = ps.scalar(r["lmi_max_eig"], "residuals.lmi_max_eig");
    c.p_min_eig = ps.scalar(r["p_min_eig"], "residuals.p_min_eig");
    c.p_margin_floor = ps.scalar(r["p_floor"], "residuals.p_floor");
  }
  return lc;
}

// Loads a certificate and re-validates it against `aug`: hash match and a fresh eigenvalue check.
inline certify::RateCertificate load_certificate(const std::filesystem::path& path,
                                                 const iqclift::AugmentedSystem& aug) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  const LoadedCertificate lc = certificate_from_yaml(root, path.string());
  detail::require(lc.system_hash == system_hash(aug.canon), ErrorCode::InvalidArgument,
                  path.string() + ": certificate was issued for a different system");
  detail::require(lc.cert.ell == aug.ell && lc.cert.P.rows() == aug.dim(),
                  ErrorCode::PartitionMismatch, path.string() + ": certificate lift length differs");
  const auto chk = certify::check_certificate(lc.cert, aug);
  detail::require(chk.ok, ErrorCode::InvalidArgument,
                  path.string() + ": certificate fails re-validation (λmax(LMI) = " +
                      fmt(chk.lmi_max_eig) + ", λmin(P) = " + fmt(chk.p_min_eig) + ")");
  return lc.cert;
}

inline std::string canonical_to_yaml(const canonical::CanonicalSystem& cs,
                                     const canonical::StructureReport& rep) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "format" << YAML::Value << "lureforge-canonical";
  out << YAML::Key << "version" << YAML::Value << kSchemaVersion;
  out << YAML::Key << "system_hash" << YAML::Value << system_hash(cs);
  out << YAML::Key << "r" << YAML::Value << cs.r;
  out << YAML::Key << "n" << YAML::Value << cs.n;
  out << YAML::Key << "d" << YAML::Value << cs.d;
  out << YAML::Key << "g" << YAML::Value << cs.g;
  out << YAML::Key << "A" << YAML::Value;
  emit_matrix(out, cs.a());
  out << YAML::Key << "from_original" << YAML::Value;
  emit_matrix(out, cs.from_original);
  out << YAML::Key << "report" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "lemma1_residual" << YAML::Value << rep.lemma1_residual;
  out << YAML::Key << "equivalent_form_residual" << YAML::Value << rep.equivalent_form_residual;
  out << YAML::Key << "k2_rank" << YAML::Value << rep.k2_rank;
  out << YAML::Key << "k2_columns" << YAML::Value << rep.k2_columns;
  out << YAML::Key << "io_equivalence_error" << YAML::Value << rep.io_equivalence_error;
  out << YAML::Key << "ok" << YAML::Value << rep.ok;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

// Parses a canonical file back; the block structure is re-derived from A, g, r.
inline canonical::CanonicalSystem canonical_from_yaml(const YAML::Node& root,
                                                      const std::string& source) {
  detail_::Parser ps(source);
  if (!root.IsMap() || !root["format"] || root["format"].as<std::string>() != "lureforge-canonical")
    ps.fail(root, "format", "not a lureforge canonical system");
  const int r = ps.integer(root["r"], "r");
  const int d = ps.integer(root["d"], "d");
  const double g = ps.scalar(root["g"], "g");
  const Matrix A = ps.matrix(root["A"], "A");
  auto cs = canonical::from_blocks(A, g, r, d);
  if (root["from_original"]) cs.from_original = ps.matrix(root["from_original"], "from_original");
  return cs;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  detail::require(static_cast<bool>(f), ErrorCode::InvalidArgument,
                  "cannot write " + path.string());
  f << text;
}

}  // namespace lureforge::io
