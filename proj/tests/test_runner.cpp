#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sselab/runner.hpp"

using namespace sselab;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"(
domain { dim = 1  lo = 0  hi = 1  n = 16 }
time { T = 1  steps = 64 }
mc { paths = 8 }
identity { points = 20 }
ensemble { members = 3  modes = 3 }
inverse { pairs = 3 }
)";

ExperimentConfig config(const std::string& extra, const std::string& dir) {
  auto c = parse_config(std::string(kSmall) + extra);
  c.output.directory = (fs::temp_directory_path() / "sselab_runner_test" / dir).string();
  fs::remove_all(c.output.directory);
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t data_rows(const fs::path& p) {
  std::size_t lines = 0;
  for (char ch : slurp(p)) lines += ch == '\n';
  return lines - 2;  // comment line and header
}

}  // namespace

TEST(Runner, SubcommandTable) {
  EXPECT_EQ(subcommands().size(), 10u);
  EXPECT_TRUE(is_subcommand("verify-identity"));
  EXPECT_FALSE(is_subcommand("frobnicate"));
  EXPECT_NE(usage_text().find("stability-scan"), std::string::npos);
  EXPECT_THROW(run("frobnicate", parse_config(kSmall)), std::invalid_argument);
}

TEST(Runner, VerifyIdentityPassesAndWritesResiduals) {
  const auto c = config("", "verify");
  const auto r = run("verify-identity", c);
  EXPECT_EQ(r.exit_code, kExitOk);
  for (const auto& ch : r.checks) EXPECT_TRUE(ch.pass) << ch.name << " " << ch.value;
  EXPECT_TRUE(fs::exists(fs::path(c.output.directory) / "identity.csv"));
  EXPECT_TRUE(fs::exists(fs::path(c.output.directory) / "checks.csv"));
  EXPECT_FALSE(fs::exists(fs::path(c.output.directory) / "failures.csv"));
}

TEST(Runner, CarlemanScanHasOneRowPerPair) {
  // (0, 0.5) with x0 = -0.5 keeps s = 40, lambda = 3 below the weight cap
  auto c = config("", "scan");
  c.domain.hi = {0.5, 0.0};
  c.domain.x0 = Point{-0.5, 0.0};
  c.carleman.s = {10, 20, 40};
  c.carleman.lambda = {2, 3};
  validate(c);
  const auto r = run("carleman-scan", c);
  EXPECT_EQ(r.exit_code, kExitOk);
  EXPECT_EQ(data_rows(fs::path(c.output.directory) / "carleman_scan.csv"), 6u);
}

TEST(Runner, EveryFileCarriesTheFingerprint) {
  const auto c = config("coefficients { a3 = const:0.5 }\n", "fp");
  const auto fp = fingerprint(c);
  const auto r = run("ucp-scan", c);
  ASSERT_FALSE(r.files.empty());
  for (const auto& f : r.files) {
    const auto text = slurp(f);
    EXPECT_EQ(text.rfind("# sselab ", 0), 0u) << f;
    EXPECT_NE(text.find("\nfingerprint,"), std::string::npos) << f;
    EXPECT_NE(text.find("\n" + fp + ","), std::string::npos) << f;
  }
}

TEST(Runner, RerunIsByteIdentical) {
  auto c = config("coefficients { a3 = const:0.5  f = bump:0.2 }\n", "det");
  const auto first = run("stability-scan", c);
  std::vector<std::string> a;
  for (const auto& f : first.files) a.push_back(slurp(f));
  const auto second = run("stability-scan", c, {3});
  ASSERT_EQ(second.files.size(), first.files.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(slurp(second.files[k]), a[k]) << second.files[k];
}

TEST(Runner, FailedChecksWriteFailuresAndExitTwo) {
  auto c = config("coefficients { a3 = const:0.5 }\n", "fail");
  c.inverse.max_iter = 1;
  const auto r = run("reconstruct", c);
  EXPECT_EQ(r.exit_code, kExitCheckFailed);
  EXPECT_TRUE(fs::exists(fs::path(c.output.directory) / "failures.csv"));
  // a later passing run removes the stale failures file
  auto ok = c;
  ok.inverse.max_iter = 500;
  EXPECT_EQ(run("reconstruct", ok).exit_code, kExitOk);
  EXPECT_FALSE(fs::exists(fs::path(c.output.directory) / "failures.csv"));
}

TEST(Runner, ReconstructRejectsNonlinearDynamics) {
  const auto c = config("nonlinearity { F1 = sat:1 }\n", "nl");
  EXPECT_THROW(run("reconstruct", c), ConfigError);
}
