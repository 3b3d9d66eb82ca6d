#pragma once

// Seeded scalar Brownian increments and order-independent Monte Carlo
// reduction.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace sselab {

/// Seed of path `index` derived from the base seed alone (splitmix64 chain),
/// so any subset of paths can be replayed in isolation.
std::uint64_t derive_path_seed(std::uint64_t base_seed, std::uint64_t index);

class BrownianPath {
 public:
  /// Increments dB_k ~ N(0, dt), dt = T / steps.
  BrownianPath(std::uint64_t base_seed, std::uint64_t index, double T, int steps);
  /// Path with explicitly given increments (e.g. replayed from disk).
  BrownianPath(std::uint64_t base_seed, std::uint64_t index, double T, std::vector<double> increments);
  /// Deterministic path with all increments zero.
  static BrownianPath zero(double T, int steps);

  std::uint64_t base_seed() const { return base_seed_; }
  std::uint64_t index() const { return index_; }
  double T() const { return T_; }
  int steps() const { return static_cast<int>(increments_.size()); }
  double dt() const { return T_ / steps(); }
  std::span<const double> increments() const { return increments_; }
  double increment(int k) const { return increments_[static_cast<std::size_t>(k)]; }

  /// The same Brownian path on a grid `factor` times coarser (increments summed).
  BrownianPath coarsened(int factor) const;

 private:
  std::uint64_t base_seed_ = 0;
  std::uint64_t index_ = 0;
  double T_ = 1.0;
  std::vector<double> increments_;
};

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
};

/// Pairwise (cascade) summation in index order.
double pairwise_sum(std::span<const double> values);

/// Mean and standard error of per-path values.
McEstimate summarize(std::span<const double> values);

/// Evaluates job(k) for k = 0..paths-1 on `threads` workers and reduces each
/// of the `dims` outputs in path order, so the result does not depend on
/// scheduling. The job receives the path index; it derives its own Brownian
/// path from (base seed, index).
std::vector<McEstimate> mc_expectation(const std::function<std::vector<double>(std::uint64_t)>& job,
                                       std::size_t dims, std::size_t paths, unsigned threads = 1);

McEstimate mc_expectation(const std::function<double(std::uint64_t)>& job, std::size_t paths,
                          unsigned threads = 1);

/// Runs body(k) for k in [0, count) on `threads` workers (static striping).
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace sselab
