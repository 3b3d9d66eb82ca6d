#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "sselab/config.hpp"
#include "sselab/report.hpp"

using namespace sselab;

namespace {

const char* kMinimal = "domain { dim = 1  lo = 0  hi = 1  n = 64 }\ntime { T = 1  steps = 512 }\n";

ConfigError parse_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "expected ConfigError for:\n" << text;
  return ConfigError("none", 0, "");
}

}  // namespace

TEST(Config, MinimalFileGetsDefaults) {
  const auto c = parse_config(kMinimal);
  EXPECT_EQ(c.domain.dim, 1);
  EXPECT_EQ(c.domain.n[0], 64);
  EXPECT_FALSE(c.domain.x0.has_value());
  EXPECT_EQ(c.make_domain().x0[0], -1.0);  // lo - (hi - lo)
  EXPECT_EQ(c.time.steps, 512);
  EXPECT_EQ(c.mc.paths, 500u);
  EXPECT_EQ(c.mc.base_seed, 1u);
  EXPECT_EQ(c.carleman.s, std::vector<double>{1.0});
  EXPECT_FALSE(c.carleman.tau.has_value());
  EXPECT_TRUE(c.nonlinearity.is_zero());
  EXPECT_TRUE(c.coefficients.a3.is_zero());
  EXPECT_EQ(c.inverse.alpha, 1e-6);
  EXPECT_EQ(c.inverse.max_iter, 500);
  EXPECT_EQ(c.output.directory, "out");
}

TEST(Config, AutoTauResolvedByWeightSetup) {
  const auto c = parse_config(std::string(kMinimal) + "carleman { tau = auto }\n");
  const auto p = c.carleman_params(1.0, 1.0);
  EXPECT_FALSE(p.tau.has_value());
  EXPECT_DOUBLE_EQ(WeightSetup(p, c.make_domain()).tau(), 14.0);
  const auto fixed = parse_config(std::string(kMinimal) + "carleman { tau = 20 }\n");
  EXPECT_EQ(*fixed.carleman_params(1.0, 1.0).tau, 20.0);
}

TEST(Config, FullFileWithListsCommentsAndStrings) {
  const auto c = parse_config(R"(
# 2D run
domain {
  dim = 2
  lo = 0, 0
  hi = 2 1
  x0 = -1 -1; n = 16 8
}
time { T = 0.5  steps = 100 }
mc { paths = 20  base_seed = 42 }
carleman { s = 1, 2, 4  lambda = 0.1 0.2 }
coefficients { a3 = const:0.5  b1 = bump:0.3  g = const:1  g_real = true }
nonlinearity { F1 = sat:1  F2 = linear:0.5 }
output { directory = "my out"  emit_trajectories = true }
)");
  EXPECT_EQ(c.domain.dim, 2);
  EXPECT_EQ(c.make_domain().upper[0], 2.0);
  EXPECT_EQ(c.make_domain().x0[1], -1.0);
  EXPECT_EQ(c.domain.n[1], 8);
  EXPECT_EQ(c.carleman.s.size(), 3u);
  EXPECT_EQ(c.carleman.lambda[1], 0.2);
  EXPECT_TRUE(c.coefficients.g_real);
  EXPECT_EQ(c.nonlinearity.F1.kind, "sat");
  EXPECT_EQ(c.nonlinearity.F2.c, 0.5);
  EXPECT_EQ(c.output.directory, "my out");
  EXPECT_TRUE(c.output.emit_trajectories);
}

TEST(Config, NamedValidationAndParseErrors) {
  EXPECT_EQ(parse_error(std::string(kMinimal) + "mc { paths = -3 }\n").field(), "mc.paths");
  EXPECT_EQ(parse_error(std::string(kMinimal) + "mc { paths = 1 }\n").field(), "mc.paths");
  const auto unknown = parse_error(std::string(kMinimal) + "time2 { T = 1 }\n");
  EXPECT_EQ(unknown.line(), 3);
  EXPECT_NE(std::string(unknown.what()).find("line 3"), std::string::npos);
  const auto key = parse_error("domain { dim = 1  lo = 0  hi = 1\n  size = 3 }\ntime { T = 1 steps = 8 }");
  EXPECT_EQ(key.line(), 2);
  EXPECT_NE(std::string(key.what()).find("known:"), std::string::npos);
  EXPECT_EQ(parse_error("time { T = 1  steps = 8 }").field(), "domain");
  EXPECT_EQ(parse_error("domain { dim = 1 lo = 0 hi = 1 x0 = 0.5 }\ntime { T = 1 steps = 8 }").field(), "domain.x0");
  EXPECT_EQ(parse_error("domain { dim = 2 lo = 0 hi = 1 1 }\ntime { T = 1 steps = 8 }").field(), "domain.lo");
  EXPECT_EQ(parse_error(std::string(kMinimal) + "time { T = 2 }").field(), "time");
  EXPECT_EQ(parse_error(std::string(kMinimal) + "carleman { lambda = 60 }").field(), "carleman.lambda");
  EXPECT_EQ(parse_error(std::string(kMinimal) + "coefficients { b1 = const:1 }").field(), "coefficients");
  EXPECT_EQ(parse_error("domain { dim = 1 lo = 0 hi = 1 n = 3 }\ntime { T = 1 steps = 8 }").field(), "domain.n");
  parse_error("domain { dim = 1 lo = 0 hi = 1 \ntime { T = 1 steps = 8 }");
  parse_error("domain { dim = 1 dim = 1 lo = 0 hi = 1 }\ntime { T = 1 steps = 8 }");
}

TEST(Config, FingerprintIgnoresOutputDirectoryOnly) {
  const auto a = parse_config(kMinimal);
  auto b = a;
  b.output.directory = "elsewhere";
  EXPECT_EQ(fingerprint(a), fingerprint(b));
  EXPECT_EQ(fingerprint(a).size(), 16u);
  auto c = a;
  c.mc.base_seed = 2;
  EXPECT_NE(fingerprint(a), fingerprint(c));
  // canonical text round-trips through the parser as documented settings
  EXPECT_NE(canonical_text(a).find("mc.paths=500"), std::string::npos);
}

TEST(Config, LoadConfigReportsMissingFile) {
  EXPECT_THROW(load_config("/nonexistent/sselab.cfg"), ConfigError);
}

TEST(Report, HeaderOnlyWhenEmpty) {
  const Table t("empty", {"a", "b"});
  const auto text = render_report(t, {"0.1.0", "00ff", "simulate"});
  EXPECT_EQ(text, "# sselab 0.1.0 fingerprint=00ff subcommand=simulate\nfingerprint,a,b\n");
}

TEST(Report, RowsCarryFingerprintAndFullPrecision) {
  Table t("r", {"x", "name", "k"});
  t.add({0.1, std::string("a,b"), 3LL});
  const auto text = render_report(t, {"v", "abc", "s"});
  EXPECT_NE(text.find("abc,0.10000000000000001,\"a,b\",3\n"), std::string::npos);
  EXPECT_THROW(t.add({1.0}), std::invalid_argument);
}

TEST(Report, NonFiniteValuesAreNeverSerialized) {
  Table t("bad", {"x"});
  t.add({std::nan("")});
  EXPECT_THROW(render_report(t, {"v", "f", "s"}), std::domain_error);
  EXPECT_THROW(format_cell(INFINITY), std::domain_error);
}

TEST(Report, UnwritableDestination) {
  EXPECT_THROW(write_text("/proc/sselab-not-writable", "x.csv", "x"), std::runtime_error);
}
