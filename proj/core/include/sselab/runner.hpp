#pragma once

// Subcommand runner. Each subcommand computes its quantities, evaluates the
// invariants it asserts and writes CSV artifacts plus checks.csv into the
// output directory; failures.csv is written only when a check fails.

#include <filesystem>
#include <string>
#include <vector>

#include "sselab/config.hpp"

namespace sselab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 2;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitConfig = 65;
inline constexpr int kExitRuntime = 70;

struct RunOptions {
  unsigned threads = 1;
};

struct CheckResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  ///< "<=", ">=", ">", "in", "==" or "skipped"
  bool pass = true;
  std::string note;
};

struct RunResult {
  int exit_code = kExitOk;
  std::vector<std::filesystem::path> files;
  std::vector<CheckResult> checks;
};

const std::vector<std::string>& subcommands();
bool is_subcommand(const std::string& name);
std::string usage_text();

/// Runs a subcommand; throws std::invalid_argument for unknown names and
/// ConfigError for configurations the subcommand cannot accept.
RunResult run(const std::string& subcommand, const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace sselab
