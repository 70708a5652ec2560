#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "lureforge/pipeline.hpp"

namespace fs = std::filesystem;
using namespace lureforge;

namespace {

enum Exit { kOk = 0, kValidation = 2, kSolver = 3, kAcceptance = 4 };

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::SolverFailure:
    case ErrorCode::BracketInfeasible:
    case ErrorCode::NotConverged:
    case ErrorCode::ConvergenceFailure:
    case ErrorCode::NonFiniteState:
      return kSolver;
    default:
      return kValidation;
  }
}

struct Options {
  std::string command;
  std::string config;
  std::optional<int> ell;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool quiet = false;
};

io::RunConfig resolve(const Options& opt) {
  io::RunConfig cfg = opt.config.empty() ? pipeline::paper_config() : io::load_config(opt.config);
  if (opt.ell) {
    if (*opt.ell < 0) throw Error(ErrorCode::InvalidArgument, "--ell must be >= 0");
    cfg.ell = *opt.ell;
  }
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.out) cfg.out = *opt.out;
  return cfg;
}

int cmd_canonicalize(const io::RunConfig& cfg, const fs::path& out) {
  const auto c = pipeline::canonicalize_system(cfg.system, cfg.m, cfg.L, cfg.seed);
  const std::string report = pipeline::format_report(c.prep.canon, c.report);
  io::write_text(out / "canonical.yaml", io::canonical_to_yaml(c.prep.canon, c.report));
  io::write_text(out / "structure_report.txt", report);
  std::cout << report;
  return c.report.ok ? kOk : kValidation;
}

int cmd_certify(const io::RunConfig& cfg, const fs::path& out, const pipeline::Log& log) {
  const auto s = pipeline::setup(cfg);
  if (!s.canon.report.ok) {
    std::cerr << pipeline::format_report(s.canon.prep.canon, s.canon.report);
    return kValidation;
  }
  const auto br = pipeline::certify_rate(s.aug, cfg.m, cfg.L, cfg.bisection, log, cfg.certify);
  io::write_text(out / "certificate.yaml",
                 io::certificate_to_yaml(br.cert, io::system_hash(s.aug.canon)));
  io::write_text(out / "bisection_log.csv", pipeline::bisection_log_csv(br));
  std::cout << "rho " << io::fmt(br.cert.rho) << "\n";
  return kOk;
}

int cmd_synthesize(const io::RunConfig& cfg, const fs::path& out, const pipeline::Log& log) {
  const auto s = pipeline::setup(cfg);
  const auto cert = pipeline::obtain_certificate(cfg, s.aug, log);
  if (!cfg.certificate)
    io::write_text(out / "certificate.yaml",
                   io::certificate_to_yaml(cert, io::system_hash(s.aug.canon)));
  const auto alg = projsynth::synthesize(s.aug, cert, cfg.constraint);
  io::write_text(out / "algorithm.yaml", pipeline::algorithm_to_yaml(alg));
  std::cout << "rho " << io::fmt(cert.rho) << ", s " << io::fmt(alg.s) << ", gamma "
            << io::fmt(projsynth::gamma_factor(alg)) << "\n";
  return kOk;
}

int cmd_run(const io::RunConfig& cfg, const fs::path& out, const pipeline::Log& log) {
  if (!cfg.oracle) throw Error(ErrorCode::InvalidArgument, cfg.source + ": run needs an oracle");
  const auto s = pipeline::setup(cfg);
  const auto cert = pipeline::obtain_certificate(cfg, s.aug, log);
  const auto [sum, files] = pipeline::run_experiment(cfg, s.canon.prep, s.aug, cert, *cfg.oracle, log);
  io::write_text(out / "projected.csv", files.projected);
  io::write_text(out / "naive.csv", files.naive);
  io::write_text(out / "unconstrained.csv", files.unconstrained);
  const std::string summary = pipeline::format_summary(sum);
  io::write_text(out / "summary.txt", summary);
  std::cout << summary;
  return kOk;
}

int cmd_repro(const io::RunConfig& cfg, const fs::path& out, const pipeline::Log& log) {
  const auto res = pipeline::repro_paper(cfg, out, log);
  for (const auto& c : res.checks)
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "  " << c.detail << "\n";
  return res.all_pass() ? kOk : kAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lure-forge: rate certificates and projected algorithm synthesis"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;
  int ell = 0;
  std::string out;
  for (const char* name : {"canonicalize", "certify", "synthesize", "run", "repro-paper"}) {
    auto* sub = app.add_subcommand(name);
    auto* cfg_opt = sub->add_option("--config", opt.config, "YAML config file")->check(CLI::ExistingFile);
    if (std::string(name) != "repro-paper") cfg_opt->required();
    sub->add_option("--ell", ell, "lift length override");
    sub->add_option("--seed", seed, "random seed override");
    sub->add_option("--out", out, "output directory override");
    sub->add_flag("--quiet,-q", opt.quiet, "suppress progress on stderr");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }
  auto* sub = app.get_subcommands().front();
  opt.command = sub->get_name();
  if (sub->count("--ell")) opt.ell = ell;
  if (sub->count("--seed")) opt.seed = seed;
  if (sub->count("--out")) opt.out = out;

  const pipeline::Log log = [&opt](const std::string& msg) {
    if (!opt.quiet) std::cerr << msg << "\n";
  };
  try {
    const io::RunConfig cfg = resolve(opt);
    const fs::path dir = cfg.out;
    if (opt.command == "canonicalize") return cmd_canonicalize(cfg, dir);
    if (opt.command == "certify") return cmd_certify(cfg, dir, log);
    if (opt.command == "synthesize") return cmd_synthesize(cfg, dir, log);
    if (opt.command == "run") return cmd_run(cfg, dir, log);
    return cmd_repro(cfg, dir, log);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
}
