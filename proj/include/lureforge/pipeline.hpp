#pragma once

#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lureforge/catalog.hpp"
#include "lureforge/certify.hpp"
#include "lureforge/io.hpp"
#include "lureforge/projsynth.hpp"

namespace lureforge::pipeline {

using Log = std::function<void(const std::string&)>;

inline void silent(const std::string&) {}

// ---------------------------------------------------------------------------------------------
// canonicalize

struct Canonicalized {
  catalog::Prepared prep;
  canonical::StructureReport report;
};

// Maximum output deviation between the given realization and its canonical form over K steps
// of a shared oracle, from matched initial states.
inline double io_equivalence_error(const sssys::ReducedLTI& original, const catalog::Prepared& prep,
                                   const oracles::ObjectiveOracle& oracle, const Matrix& x0, int K) {
  sssys::ReducedLTI orig = original;
  orig.d = oracle.dim;
  sssys::ReducedLTI canon = prep.canon.lti();
  canon.d = oracle.dim;
  const auto a = sssys::simulate({orig, oracle}, x0, K);
  const auto b = sssys::simulate({canon, oracle}, Matrix(prep.to_canonical * x0), K);
  double err = 0.0;
  for (int k = 0; k <= K; ++k) err = std::max(err, (a.outputs[k] - b.outputs[k]).norm());
  return err;
}

inline Canonicalized canonicalize_system(const sssys::ReducedLTI& sys, double m, double L,
                                         std::uint64_t seed = 1, int K = 100) {
  Canonicalized out;
  out.prep = catalog::prepare(sys);
  out.report = canonical::structural_checks(out.prep.canon);
  std::mt19937_64 rng(seed);
  const auto f = oracles::random_quadratic(sys.d, m, L, rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix x0(sys.order(), sys.d);
  for (Eigen::Index i = 0; i < x0.size(); ++i) x0(i) = unif(rng);
  out.report.io_equivalence_error = io_equivalence_error(sys, out.prep, f, x0, K);
  out.report.ok = out.report.ok && out.report.io_equivalence_error <= 1e-9;
  return out;
}

inline std::string format_report(const canonical::CanonicalSystem& cs,
                                 const canonical::StructureReport& rep) {
  std::ostringstream os;
  os << "relative degree r      " << cs.r << "\n"
     << "g = C A^(r-1) B        " << io::fmt(rep.g) << "\n"
     << "canonical order n      " << cs.n << "\n"
     << "K2 rank                " << rep.k2_rank << " / " << rep.k2_columns << "\n"
     << "lemma1 residual        " << io::fmt(rep.lemma1_residual) << "\n"
     << "equivalent-form resid. " << io::fmt(rep.equivalent_form_residual) << "\n"
     << "i/o equivalence error  " << io::fmt(rep.io_equivalence_error) << "\n"
     << "structural checks      " << (rep.ok ? "pass" : "FAIL") << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------------------------
// certify

inline std::string bisection_log_csv(const certify::BisectionResult& br) {
  std::ostringstream os;
  os << "rho,status,margin,lmi_max_eig,solver_iterations\n";
  for (const auto& e : br.log)
    os << io::fmt(e.rho) << "," << certify::to_string(e.status) << "," << io::fmt(e.margin) << ","
       << io::fmt(e.lmi_residual) << "," << e.iterations << "\n";
  return os.str();
}

inline certify::BisectionResult certify_rate(const iqclift::AugmentedSystem& aug, double m,
                                             double L, const certify::BisectionSettings& bs,
                                             const Log& log = silent,
                                             const certify::Settings& settings = {}) {
  log("certifying: augmented dimension " + std::to_string(aug.dim()) + ", ell = " +
      std::to_string(aug.ell));
  auto br = certify::bisect_rate(aug, m, L, bs, sdp::InteriorPointSolver{}, settings);
  log("certified rho = " + io::fmt(br.hi) + " (bracket [" + io::fmt(br.lo) + ", " +
      io::fmt(br.hi) + "], " + std::to_string(br.log.size()) + " SDP solves)");
  return br;
}

// ---------------------------------------------------------------------------------------------
// shared setup

struct Setup {
  Canonicalized canon;
  iqclift::AugmentedSystem aug;
};

inline Setup setup(const io::RunConfig& cfg) {
  Setup s;
  s.canon = canonicalize_system(cfg.system, cfg.m, cfg.L, cfg.seed);
  s.aug = iqclift::augment(s.canon.prep.canon, iqclift::build_filter(cfg.ell));
  return s;
}

// Reuses the certificate named in the config (re-validated on load), otherwise bisects.
inline certify::RateCertificate obtain_certificate(const io::RunConfig& cfg,
                                                   const iqclift::AugmentedSystem& aug,
                                                   const Log& log = silent) {
  if (cfg.certificate) {
    log("loading certificate " + cfg.certificate->string());
    return io::load_certificate(*cfg.certificate, aug);
  }
  return certify_rate(aug, cfg.m, cfg.L, cfg.bisection, log, cfg.certify).cert;
}

inline std::string algorithm_to_yaml(const projsynth::ProjectedAlgorithm& alg) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "format" << YAML::Value << "lureforge-algorithm";
  out << YAML::Key << "version" << YAML::Value << io::kSchemaVersion;
  out << YAML::Key << "system_hash" << YAML::Value << io::system_hash(alg.canon());
  out << YAML::Key << "constraint" << YAML::Value << projection::kind_name(alg.set);
  out << YAML::Key << "rho" << YAML::Value << alg.rho();
  out << YAML::Key << "ell" << YAML::Value << alg.aug.ell;
  out << YAML::Key << "r" << YAML::Value << alg.canon().r;
  out << YAML::Key << "g" << YAML::Value << alg.canon().g;
  out << YAML::Key << "s" << YAML::Value << alg.s;
  out << YAML::Key << "gamma" << YAML::Value << projsynth::gamma_factor(alg);
  out << YAML::Key << "A" << YAML::Value;
  io::emit_matrix(out, alg.canon().a());
  out << YAML::Key << "chi" << YAML::Value;
  io::emit_matrix(out, alg.chi.transpose());
  out << YAML::Key << "filter_gain" << YAML::Value;
  io::emit_matrix(out, alg.filter_gain.transpose());
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

// ---------------------------------------------------------------------------------------------
// run

struct Series {
  std::vector<Matrix> states;
  std::vector<Vector> outputs, gradients;
  std::vector<double> proj_residuals;
  Matrix x_star;
  Vector y_star;
};

struct Envelope {
  double c_p = 0.0;           // ‖x₀ − x*‖_P
  double warmup = 1.0;        // max_{j≤ℓ} ‖x_j − x*‖_P / (ρ^j ‖x₀ − x*‖_P), at least 1
  double inv_sqrt_pmin = 0.0; // 1/√λ_min(P)
  double grad_star = 0.0;     // ‖∇f(y*)‖
  double L = 0.0;

  double p_norm(double rho, int k) const { return c_p * warmup * std::pow(rho, k); }
  double two_norm(double rho, int k) const { return p_norm(rho, k) * inv_sqrt_pmin; }
  double f_gap(double rho, int k) const {
    const double e = two_norm(rho, k);
    return grad_star * e + 0.5 * L * e * e;
  }
};

inline Envelope make_envelope(const certify::RateCertificate& cert, const Series& s,
                              const oracles::ObjectiveOracle& f, int ell) {
  Envelope env;
  env.c_p = std::sqrt(detail::weighted_sq_norm(cert.P, s.states.front() - s.x_star));
  for (int j = 1; j <= ell && j < static_cast<int>(s.states.size()); ++j) {
    const double e = std::sqrt(detail::weighted_sq_norm(cert.P, s.states[j] - s.x_star));
    if (env.c_p > 0.0) env.warmup = std::max(env.warmup, e / (env.c_p * std::pow(cert.rho, j)));
  }
  env.inv_sqrt_pmin = 1.0 / std::sqrt(detail::min_eigenvalue(cert.P));
  env.grad_star = f.gradient(s.y_star).norm();
  env.L = f.L;
  return env;
}

struct SeriesCheck {
  bool below_envelope = true;
  double worst_ratio = 0.0;  // per-step P-norm contraction, k ≥ ℓ
};

inline std::string series_csv_header(int d, bool figure) {
  std::ostringstream os;
  if (figure) os << "trial,";
  os << "k";
  for (int i = 0; i < d; ++i) os << ",y" << i;
  os << ",grad_norm,proj_residual,err_2norm,err_Pnorm,envelope";
  if (figure) os << ",envelope_2norm,f_gap,envelope_f";
  os << "\n";
  return os.str();
}

inline SeriesCheck append_series_csv(std::ostringstream& os, const Series& s,
                                     const certify::RateCertificate& cert,
                                     const oracles::ObjectiveOracle& f, int ell, bool figure,
                                     int trial, bool check_envelope) {
  SeriesCheck chk;
  const Envelope env = make_envelope(cert, s, f, ell);
  const double f_star = f.value(s.y_star);
  for (size_t k = 0; k < s.states.size(); ++k) {
    const int kk = static_cast<int>(k);
    const double e2 = (s.outputs[k] - s.y_star).norm();
    const double ep = std::sqrt(detail::weighted_sq_norm(cert.P, s.states[k] - s.x_star));
    const double fg = std::abs(f.value(s.outputs[k]) - f_star);
    if (figure) os << trial << ",";
    os << k;
    for (Eigen::Index i = 0; i < s.outputs[k].size(); ++i) os << "," << io::fmt(s.outputs[k](i));
    os << "," << io::fmt(s.gradients[k].norm()) << "," << io::fmt(s.proj_residuals[k]) << ","
       << io::fmt(e2) << "," << io::fmt(ep) << "," << io::fmt(env.p_norm(cert.rho, kk));
    if (figure)
      os << "," << io::fmt(env.two_norm(cert.rho, kk)) << "," << io::fmt(fg) << ","
         << io::fmt(env.f_gap(cert.rho, kk));
    os << "\n";
    if (check_envelope) {
      // Relative slack absorbs round-off once the error reaches machine precision.
      const double slack = 1e-9 * (1.0 + env.c_p);
      chk.below_envelope = chk.below_envelope && ep <= env.p_norm(cert.rho, kk) + slack &&
                           e2 <= env.two_norm(cert.rho, kk) + slack &&
                           fg <= env.f_gap(cert.rho, kk) + slack * (1.0 + env.grad_star);
    }
  }
  chk.worst_ratio = projsynth::worst_contraction(cert.P, s.states, s.x_star, ell);
  return chk;
}

// Initial states in the coordinates of the given realization: x0 from the config for trial 0,
// otherwise uniform on [0, 1]^{n×d}.
inline std::vector<Matrix> initial_states(const io::RunConfig& cfg, int n, int d, int trials) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Matrix> out;
  for (int t = 0; t < trials; ++t) {
    Matrix x(n, d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = unif(rng);
    if (t == 0 && cfg.x0) x = *cfg.x0;
    out.push_back(x);
  }
  return out;
}

inline Series make_series(const projsynth::ProjectedTrajectory& tr, const Matrix& x_star,
                          const iqclift::AugmentedSystem& aug) {
  Series s;
  s.states = tr.states;
  s.outputs = tr.outputs;
  s.gradients = tr.gradients;
  s.proj_residuals = tr.proj_residuals;
  s.x_star = x_star;
  s.y_star = x_star.row(aug.output_row()).transpose();
  return s;
}

struct RunSummary {
  double rho = 0.0;
  double gamma = 0.0;
  double chi_norm = 0.0;
  double s = 0.0;
  double worst_ratio_projected = 0.0;
  double worst_ratio_unconstrained = 0.0;
  double final_kkt = 0.0;
  double worst_kkt = 0.0;
  double naive_final_kkt = -1.0;  // −1 when the baseline did not settle
  bool envelope_projected = true;
  bool envelope_unconstrained = true;
  bool projected_matches_unconstrained = false;
  Vector y_star;
  int trials = 0;
};

struct RunFiles {
  std::string projected, naive, unconstrained, fig1, fig2;
};

inline std::pair<RunSummary, RunFiles> run_experiment(const io::RunConfig& cfg,
                                                      const catalog::Prepared& prep,
                                                      const iqclift::AugmentedSystem& aug,
                                                      const certify::RateCertificate& cert,
                                                      const oracles::ObjectiveOracle& f,
                                                      const Log& log = silent) {
  const auto& cs = prep.canon;
  const int d = cs.d;
  const auto alg = projsynth::synthesize(aug, cert, cfg.constraint);
  const auto free_alg = projsynth::synthesize(aug, cert, projection::Unconstrained{});
  detail::require(f.minimizer.has_value(), ErrorCode::InvalidArgument,
                  "run: the oracle must provide its unconstrained minimizer");
  const Matrix x_free = certify::augmented_equilibrium(aug, *f.minimizer, f.gradient(*f.minimizer));

  RunSummary sum;
  sum.rho = cert.rho;
  sum.gamma = projsynth::gamma_factor(alg);
  sum.chi_norm = alg.chi.norm();
  sum.s = alg.s;
  sum.trials = cfg.trials;
  RunFiles files;
  std::ostringstream proj_os, naive_os, free_os, fig1_os, fig2_os;
  proj_os << series_csv_header(d, false);
  naive_os << series_csv_header(d, false);
  free_os << series_csv_header(d, false);
  fig1_os << series_csv_header(d, true);
  fig2_os << series_csv_header(d, true);

  const auto x0s = initial_states(cfg, prep.to_canonical.cols(), d, cfg.trials);
  for (int t = 0; t < cfg.trials; ++t) {
    const Matrix x0 = projsynth::lift_state(aug, prep.to_canonical * x0s[t]);
    const bool free_set = std::holds_alternative<projection::Unconstrained>(cfg.constraint);
    const Matrix x_proj = free_set ? x_free : projsynth::converge(alg, f, x0);
    const auto rep = projsynth::check_fixed_point(alg, f, x_proj);
    sum.worst_kkt = std::max(sum.worst_kkt, rep.kkt_residual);
    if (t == 0) {
      sum.final_kkt = rep.kkt_residual;
      sum.y_star = rep.y_star;
    }

    const auto ptr = projsynth::run(alg, f, x0, cfg.horizon);
    const Series ps = make_series(ptr, x_proj, aug);
    const auto pchk = append_series_csv(fig2_os, ps, cert, f, aug.ell, true, t, true);
    sum.envelope_projected = sum.envelope_projected && pchk.below_envelope;
    sum.worst_ratio_projected = std::max(sum.worst_ratio_projected, pchk.worst_ratio);

    const auto ftr = projsynth::run(free_alg, f, x0, cfg.horizon);
    const Series fs = make_series(ftr, x_free, aug);
    const auto fchk = append_series_csv(fig1_os, fs, cert, f, aug.ell, true, t, true);
    sum.envelope_unconstrained = sum.envelope_unconstrained && fchk.below_envelope;
    sum.worst_ratio_unconstrained = std::max(sum.worst_ratio_unconstrained, fchk.worst_ratio);

    if (t == 0) {
      append_series_csv(proj_os, ps, cert, f, aug.ell, false, t, false);
      append_series_csv(free_os, fs, cert, f, aug.ell, false, t, false);
      double dev = 0.0;
      for (size_t k = 0; k < ptr.states.size(); ++k)
        dev = std::max(dev, (ptr.states[k] - ftr.states[k]).cwiseAbs().maxCoeff());
      sum.projected_matches_unconstrained = dev <= 1e-10;

      const auto ntr = projsynth::run(alg, f, x0, cfg.horizon, projsynth::Variant::Naive);
      append_series_csv(naive_os, make_series(ntr, x_proj, aug), cert, f, aug.ell, false, t, false);
      try {
        const Matrix xn = projsynth::converge(alg, f, x0, 1e-12, 20000, projsynth::Variant::Naive);
        sum.naive_final_kkt = projsynth::kkt_residual(cfg.constraint, f,
                                                      xn.row(aug.output_row()).transpose());
      } catch (const Error&) {
        sum.naive_final_kkt = -1.0;
      }
    }
    log("trial " + std::to_string(t) + ": worst P-norm ratio " + io::fmt(pchk.worst_ratio) +
        ", KKT residual " + io::fmt(rep.kkt_residual));
  }
  files.projected = proj_os.str();
  files.naive = naive_os.str();
  files.unconstrained = free_os.str();
  files.fig1 = fig1_os.str();
  files.fig2 = fig2_os.str();
  return {sum, files};
}

inline std::string format_summary(const RunSummary& s) {
  std::ostringstream os;
  os << "certified rho                 " << io::fmt(s.rho) << "\n"
     << "trials                        " << s.trials << "\n"
     << "y* (trial 0)                  ";
  for (Eigen::Index i = 0; i < s.y_star.size(); ++i) os << (i ? " " : "") << io::fmt(s.y_star(i));
  os << "\n"
     << "gamma                         " << io::fmt(s.gamma) << "\n"
     << "schur s                       " << io::fmt(s.s) << "\n"
     << "|chi|                         " << io::fmt(s.chi_norm) << "\n"
     << "final KKT residual            " << io::fmt(s.final_kkt) << "\n"
     << "worst KKT residual            " << io::fmt(s.worst_kkt) << "\n"
     << "worst contraction (projected) " << io::fmt(s.worst_ratio_projected) << "\n"
     << "worst contraction (unconstr.) " << io::fmt(s.worst_ratio_unconstrained) << "\n"
     << "below envelope (projected)    " << (s.envelope_projected ? "yes" : "no") << "\n"
     << "below envelope (unconstr.)    " << (s.envelope_unconstrained ? "yes" : "no") << "\n"
     << "naive final KKT residual      "
     << (s.naive_final_kkt < 0 ? std::string("not settled") : io::fmt(s.naive_final_kkt)) << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------------------------
// paper reproduction

inline io::RunConfig paper_config(int ell = catalog::paper::ell, std::uint64_t seed = 1) {
  io::RunConfig cfg;
  cfg.source = "<paper>";
  cfg.system = catalog::paper::system(2);
  cfg.system_label = "delayed-gradient-example";
  cfg.m = catalog::paper::m;
  cfg.L = catalog::paper::L;
  cfg.ell = ell;
  cfg.constraint = catalog::paper::ellipse();
  cfg.oracle = oracles::quadratic(catalog::paper::F(), catalog::paper::p());
  cfg.horizon = 150;
  cfg.trials = 10;
  cfg.seed = seed;
  cfg.out = "repro";
  return cfg;
}

struct CheckRow {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ReproResult {
  certify::BisectionResult bisection;
  RunSummary summary;
  std::vector<CheckRow> checks;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

inline ReproResult repro_paper(const io::RunConfig& cfg, const std::filesystem::path& out_dir,
                               const Log& log = silent) {
  ReproResult res;
  const auto canon = canonicalize_system(cfg.system, cfg.m, cfg.L, cfg.seed);
  io::write_text(out_dir / "canonical.yaml", io::canonical_to_yaml(canon.prep.canon, canon.report));
  const auto aug = iqclift::augment(canon.prep.canon, iqclift::build_filter(cfg.ell));
  res.bisection = certify_rate(aug, cfg.m, cfg.L, cfg.bisection, log, cfg.certify);
  const auto& cert = res.bisection.cert;
  io::write_text(out_dir / "certificate.yaml",
                 io::certificate_to_yaml(cert, io::system_hash(canon.prep.canon)));
  io::write_text(out_dir / "bisection_log.csv", bisection_log_csv(res.bisection));

  const auto [sum, files] = run_experiment(cfg, canon.prep, aug, cert, *cfg.oracle, log);
  res.summary = sum;
  io::write_text(out_dir / "projected.csv", files.projected);
  io::write_text(out_dir / "naive.csv", files.naive);
  io::write_text(out_dir / "unconstrained.csv", files.unconstrained);
  io::write_text(out_dir / "fig1_unconstrained.csv", files.fig1);
  io::write_text(out_dir / "fig2_projected.csv", files.fig2);

  const double target = catalog::paper::reported_rate;
  if (cfg.ell == catalog::paper::ell)
    res.checks.push_back({"rate", std::abs(cert.rho - target) <= 0.01,
                          "rho = " + io::fmt(cert.rho) + ", expected 0.827 +/- 0.01"});
  else
    res.checks.push_back({"rate", true, "ell = " + std::to_string(cfg.ell) +
                                            " frontier entry, rho = " + io::fmt(cert.rho)});
  res.checks.push_back({"structure", canon.report.ok,
                        "lemma1 " + io::fmt(canon.report.lemma1_residual) + ", g " +
                            io::fmt(canon.report.g)});
  res.checks.push_back({"contraction", sum.worst_ratio_projected <= cert.rho * (1.0 + 1e-8),
                        "worst ratio " + io::fmt(sum.worst_ratio_projected)});
  res.checks.push_back({"optimality", sum.worst_kkt <= 1e-6 && sum.gamma > 0.0,
                        "KKT " + io::fmt(sum.worst_kkt) + ", gamma " + io::fmt(sum.gamma)});
  res.checks.push_back({"fig1-envelope", sum.envelope_unconstrained,
                        "unconstrained errors below C*rho^k"});
  res.checks.push_back({"fig2-envelope", sum.envelope_projected,
                        "projected errors below C*rho^k"});

  std::ostringstream os;
  os << format_summary(sum) << "\nchecks\n";
  for (const auto& c : res.checks)
    os << "  " << (c.pass ? "PASS " : "FAIL ") << c.name << "  " << c.detail << "\n";
  io::write_text(out_dir / "summary.txt", os.str());
  return res;
}

}  // namespace lureforge::pipeline
