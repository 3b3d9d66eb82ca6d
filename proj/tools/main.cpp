#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sselab/config.hpp"
#include "sselab/report.hpp"
#include "sselab/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Carleman and observability laboratory for stochastic Schrodinger equations"};
  app.set_version_flag("--version", sselab::version());
  std::string subcommand, config_path, out_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  app.add_option("subcommand", subcommand, "one of: simulate, verify-identity, weight-bounds, carleman-scan, "
                                           "observability, hidden-reg, energy-check, ucp-scan, stability-scan, "
                                           "reconstruct")
      ->required();
  app.add_option("--config", config_path, "experiment configuration file")->required();
  app.add_option("--out", out_dir, "output directory (overrides output.directory)");
  app.add_option("--seed", seed, "base seed override (mc.base_seed)");
  app.add_option("--threads", threads, "worker threads for Monte Carlo paths")->check(CLI::Range(1u, 1024u));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << sselab::usage_text();
    return sselab::kExitUsage;
  }
  if (!sselab::is_subcommand(subcommand)) {
    std::cerr << "unknown subcommand '" << subcommand << "'\n" << sselab::usage_text();
    return sselab::kExitUsage;
  }

  sselab::ExperimentConfig config;
  try {
    config = sselab::load_config(config_path);
    if (!out_dir.empty()) config.output.directory = out_dir;
    if (seed) config.mc.base_seed = *seed;
    sselab::validate(config);
  } catch (const sselab::ConfigError& e) {
    std::cerr << config_path << ": " << e.what() << "\n";
    return sselab::kExitConfig;
  }

  try {
    const sselab::RunResult result = sselab::run(subcommand, config, {threads});
    for (const auto& c : result.checks)
      std::cout << (c.relation == "skipped" ? "SKIP" : c.pass ? "ok  " : "FAIL") << "  " << c.name << "\n";
    for (const auto& f : result.files) std::cout << "wrote " << f.string() << "\n";
    return result.exit_code;
  } catch (const sselab::ConfigError& e) {
    std::cerr << config_path << ": " << e.what() << "\n";
    return sselab::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sselab::kExitRuntime;
  }
}
