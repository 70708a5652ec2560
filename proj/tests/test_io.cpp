#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "lureforge/io.hpp"
#include "lureforge/pipeline.hpp"

using namespace lureforge;

namespace {

io::RunConfig parse(const std::string& text) {
  return io::parse_config(YAML::Load(text), "test.yaml");
}

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    return e.what();
  }
  ADD_FAILURE() << "no error for:\n" << text;
  return "";
}

}  // namespace

TEST(Io, ShippedConfigsParse) {
  for (const char* name : {"paper.yaml", "gradient_descent.yaml", "nesterov_ball.yaml"}) {
    const auto cfg = io::load_config(std::filesystem::path(LF_CONFIG_DIR) / name);
    EXPECT_TRUE(cfg.oracle.has_value()) << name;
    EXPECT_GE(cfg.system.d, 1) << name;
  }
  const auto paper = io::load_config(std::filesystem::path(LF_CONFIG_DIR) / "paper.yaml");
  EXPECT_EQ(paper.ell, 9);
  EXPECT_LE((paper.system.a - catalog::paper::restored_a()).norm(), 1e-12);
  EXPECT_EQ(projection::kind_name(paper.constraint), "ellipsoid");
}

TEST(Io, MalformedMatrixRowNamesField) {
  const std::string msg = parse_error(
      "version: 1\n"
      "system:\n"
      "  A: [[1, 0],\n"
      "      [0.5]]\n"
      "  B: [1, 0]\n"
      "  C: [1, 0]\n");
  EXPECT_NE(msg.find("system.A"), std::string::npos) << msg;
  EXPECT_NE(msg.find("test.yaml:4:"), std::string::npos) << msg;
}

TEST(Io, ValidationErrors) {
  EXPECT_NE(parse_error("system: {preset: nesterov}\n").find("version"), std::string::npos);
  EXPECT_NE(parse_error("version: 2\nsystem: {preset: nesterov}\n").find("version"),
            std::string::npos);
  EXPECT_NE(parse_error("version: 1\nsystem: {preset: nesterov}\nbogus: 1\n").find("bogus"),
            std::string::npos);
  EXPECT_NE(parse_error("version: 1\nsystem: {preset: nope}\n").find("system.preset"),
            std::string::npos);
  EXPECT_NE(parse_error("version: 1\nsystem: {preset: nesterov}\nsector: {m: 5, L: 1}\n")
                .find("sector"),
            std::string::npos);
  EXPECT_NE(parse_error("version: 1\nsystem: {preset: nesterov, d: 2}\n"
                        "constraint: {kind: ball, center: [0, 0, 0], radius: 1}\n")
                .find("constraint"),
            std::string::npos);
  EXPECT_NE(parse_error("version: 1\nsystem: {preset: nesterov}\nlift: {ell: -1}\n")
                .find("lift.ell"),
            std::string::npos);
  EXPECT_NE(parse_error("version: 1\nsystem: {preset: nesterov}\nlift: {ell: x}\n")
                .find("lift.ell"),
            std::string::npos);
}

TEST(Io, MissingFileIsParseError) {
  try {
    io::load_config("/nonexistent/config.yaml");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
}

TEST(Io, FlatMatrixNeedsOrder) {
  const auto cfg = parse(
      "version: 1\n"
      "system: {n: 2, A: [1, 0, 0.5, 0.2], B: [-0.1, 0], C: [1, 0]}\n");
  EXPECT_EQ(cfg.system.a(1, 0), 0.5);
}

TEST(Io, CertificateRoundTripAndRecheck) {
  const auto cs = catalog::prepare(catalog::gradient_descent(2.0 / 11.0)).canon;
  const auto aug = iqclift::augment(cs, iqclift::build_filter(0));
  const auto cert = certify::bisect_rate(aug, 1.0, 10.0).cert;
  const auto dir = std::filesystem::temp_directory_path() / "lureforge_io_test";
  io::write_text(dir / "cert.yaml", io::certificate_to_yaml(cert, io::system_hash(cs)));
  const auto back = io::load_certificate(dir / "cert.yaml", aug);
  EXPECT_EQ(back.rho, cert.rho);
  EXPECT_LE((back.P - cert.P).norm(), 0.0);

  // Same file against a different system.
  const auto other = iqclift::augment(catalog::prepare(catalog::gradient_descent(0.1)).canon,
                                      iqclift::build_filter(0));
  EXPECT_THROW(io::load_certificate(dir / "cert.yaml", other), Error);

  // A tampered rate fails the eigenvalue recheck.
  auto bad = cert;
  bad.rho = 0.6;
  io::write_text(dir / "bad.yaml", io::certificate_to_yaml(bad, io::system_hash(cs)));
  EXPECT_THROW(io::load_certificate(dir / "bad.yaml", aug), Error);
  std::filesystem::remove_all(dir);
}

TEST(Io, CanonicalRoundTrip) {
  const auto c = pipeline::canonicalize_system(catalog::paper::system(2), 1, 10);
  const std::string text = io::canonical_to_yaml(c.prep.canon, c.report);
  const auto back = io::canonical_from_yaml(YAML::Load(text), "mem");
  EXPECT_EQ(back.r, 2);
  EXPECT_EQ(back.d, 2);
  EXPECT_LE((back.a() - c.prep.canon.a()).norm(), 0.0);
  EXPECT_EQ(io::system_hash(back), io::system_hash(c.prep.canon));
}

TEST(Io, NumberFormattingIsExact) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789})
    EXPECT_EQ(std::stod(io::fmt(v)), v);
}
