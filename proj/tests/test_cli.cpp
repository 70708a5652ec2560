#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = LF_CONFIG_DIR;

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LF_CLI) + " " + args + " -q >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lureforge_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Cli, CanonicalizeGradientDescent) {
  const auto out = scratch("canon");
  EXPECT_EQ(run_cli("canonicalize --config " + (kConfigs / "gradient_descent.yaml").string() +
                    " --out " + out.string()),
            0);
  const std::string report = slurp(out / "structure_report.txt");
  EXPECT_NE(report.find("relative degree r      1"), std::string::npos) << report;
  EXPECT_TRUE(fs::exists(out / "canonical.yaml"));
}

TEST(Cli, ValidationFailureExitCode) {
  const auto dir = scratch("bad");
  std::ofstream(dir / "bad.yaml") << "version: 1\nsystem:\n  A: [[1, 0], [0.5]]\n  B: [1, 0]\n"
                                     "  C: [1, 0]\n";
  EXPECT_EQ(run_cli("canonicalize --config " + (dir / "bad.yaml").string()), 2);
  EXPECT_EQ(run_cli("certify --config " + (dir / "missing.yaml").string()), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
}

TEST(Cli, StructuralFailureExitCode) {
  // The rounded printed matrix without the integrator restored fails the structural checks.
  const auto dir = scratch("structure");
  std::ofstream(dir / "raw.yaml")
      << "version: 1\nsystem:\n  d: 2\n"
         "  A: [[0.342, 2.297, 0.204, -0.157], [1, 0, 0, 0],\n"
         "      [-6.583, -17.788, -2.044, 1.571], [0, -24.838, -3.104, 2.386]]\n"
         "  B: [-0.1519, 0, 0, 0]\n  C: [0, 1, 0, 0]\n";
  EXPECT_EQ(run_cli("canonicalize --config " + (dir / "raw.yaml").string() + " --out " +
                    dir.string()),
            2);
}

TEST(Cli, SolverFailureExitCode) {
  const auto dir = scratch("bracket");
  std::ofstream(dir / "c.yaml") << "version: 1\nsystem: {preset: gradient-descent}\n"
                                   "bisection: {lo: 0.3, hi: 0.6}\n";
  EXPECT_EQ(run_cli("certify --config " + (dir / "c.yaml").string() + " --out " + dir.string()), 3);
}

TEST(Cli, CertifyThenReuseCertificate) {
  const auto dir = scratch("reuse");
  const std::string cfg = (kConfigs / "gradient_descent.yaml").string();
  ASSERT_EQ(run_cli("certify --config " + cfg + " --out " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "bisection_log.csv"));
  std::ofstream(dir / "reuse.yaml") << slurp(cfg) << "certificate: certificate.yaml\n";
  EXPECT_EQ(run_cli("synthesize --config " + (dir / "reuse.yaml").string() + " --out " +
                    dir.string()),
            0);
  EXPECT_NE(slurp(dir / "algorithm.yaml").find("lureforge-algorithm"), std::string::npos);
}

TEST(Cli, RunWritesAllOutputsDeterministically) {
  const auto a = scratch("run_a"), b = scratch("run_b");
  const std::string cfg = (kConfigs / "nesterov_ball.yaml").string();
  ASSERT_EQ(run_cli("run --config " + cfg + " --seed 4 --out " + a.string()), 0);
  ASSERT_EQ(run_cli("run --config " + cfg + " --seed 4 --out " + b.string()), 0);
  for (const char* f : {"projected.csv", "naive.csv", "unconstrained.csv", "summary.txt"}) {
    EXPECT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const std::string head = slurp(a / "projected.csv").substr(0, 80);
  EXPECT_EQ(head.rfind("k,y0,y1,y2,grad_norm,proj_residual,err_2norm,err_Pnorm,envelope\n", 0), 0u)
      << head;
}

TEST(Cli, ZeroHorizonGivesInitialRowOnly) {
  const auto dir = scratch("k0");
  std::string text = slurp(kConfigs / "gradient_descent.yaml");
  text.replace(text.find("horizon: 60"), 11, "horizon: 0");
  std::ofstream(dir / "k0.yaml") << text;
  ASSERT_EQ(run_cli("run --config " + (dir / "k0.yaml").string() + " --out " + dir.string()), 0);
  const std::string csv = slurp(dir / "projected.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2) << csv;
}

TEST(Cli, UnconstrainedRunMatchesUnconstrainedCsv) {
  const auto dir = scratch("free");
  std::string text = slurp(kConfigs / "gradient_descent.yaml");
  text.replace(text.find("constraint:"), text.find('\n', text.find("constraint:")) -
                                             text.find("constraint:"),
               "constraint: {kind: none}");
  std::ofstream(dir / "free.yaml") << text;
  ASSERT_EQ(run_cli("run --config " + (dir / "free.yaml").string() + " --out " + dir.string()), 0);
  EXPECT_EQ(slurp(dir / "projected.csv"), slurp(dir / "unconstrained.csv"));
}
