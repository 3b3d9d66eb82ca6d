#pragma once

// Experiment configuration: a plain-text file of nested blocks
//
//   domain { dim = 1  lo = 0  hi = 1  x0 = -1  n = 64 }
//   time {
//     T = 1
//     steps = 512
//   }
//
// Statements end at a newline, ';' or '}'. List values are separated by
// commas or blanks, '#' starts a comment. Unknown blocks and keys are errors.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sselab/coefficients.hpp"
#include "sselab/geometry.hpp"
#include "sselab/inverse.hpp"
#include "sselab/weights.hpp"

namespace sselab {

/// Parse or validation failure. line() is 0 for validation errors; field()
/// names the offending key as block.key when known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, int line, std::string field);
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

struct ExperimentConfig {
  struct DomainBlock {
    int dim = 1;
    Point lo{0.0, 0.0};
    Point hi{1.0, 1.0};
    std::optional<Point> x0;  ///< default: lo - (hi - lo) per axis
    std::array<int, 2> n{64, 64};
  } domain;
  struct TimeBlock {
    double T = 1.0;
    int steps = 512;
  } time;
  struct McBlock {
    std::size_t paths = 500;
    std::uint64_t base_seed = 1;
  } mc;
  struct CarlemanBlock {
    std::vector<double> s{1.0};
    std::vector<double> lambda{1.0};
    std::optional<double> tau;  ///< empty: auto
    std::vector<double> margins{0.2, 0.1, 0.05, 0.025};
  } carleman;
  CoefficientSpec coefficients;
  NonlinearityPair nonlinearity;
  struct EnsembleBlock {
    std::size_t members = 10;
    std::size_t modes = 4;
    std::uint64_t seed = 1;
  } ensemble;
  struct IdentityBlock {
    std::size_t points = 100;
    std::uint64_t seed = 1;
    double fd_h = 0.02;
  } identity;
  struct InverseBlock {
    double alpha = 1e-6;
    int max_iter = 500;
    double rel_tol = 1e-8;
    std::size_t pairs = 10;
    std::uint64_t path_index = 0;
  } inverse;
  struct OutputBlock {
    std::string directory = "out";
    bool emit_trajectories = false;
  } output;

  Domain make_domain() const;
  Mesh make_mesh() const;
  CarlemanParams carleman_params(double s, double lambda) const;
};

ExperimentConfig parse_config(const std::string& text);
/// Reads, parses and validates a configuration file.
ExperimentConfig load_config(const std::filesystem::path& path);
/// Throws ConfigError naming the first invalid field.
void validate(const ExperimentConfig& config);

/// Canonical text of every resolved setting except output.directory.
std::string canonical_text(const ExperimentConfig& config);
/// 64-bit FNV-1a of canonical_text, as 16 hex digits.
std::string fingerprint(const ExperimentConfig& config);

}  // namespace sselab
