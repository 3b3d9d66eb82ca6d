#pragma once

// Semilinear forward model, observation map z0 -> d_nu z on Gamma0, stability
// scan, and pathwise Tikhonov reconstruction of the initial state with a
// known Brownian path.

#include <optional>
#include <string>
#include <vector>

#include "sselab/estimates.hpp"
#include "sselab/simulator.hpp"

namespace sselab {

/// zero | linear:c (c r) | sat:c (c r / (1 + r)); Lipschitz constant |c|.
struct NonlinearityProfile {
  std::string kind = "zero";
  double c = 0.0;

  static NonlinearityProfile parse(const std::string& text);
  std::string to_string() const;
  bool is_zero() const { return kind == "zero" || c == 0.0; }
  double eval(double r) const;
  double lipschitz() const { return is_zero() ? 0.0 : std::abs(c); }
};

/// F1 (drift, returned as a real multiple of 1 + 0i) and F2 (noise).
struct NonlinearityPair {
  NonlinearityProfile F1, F2;

  bool is_zero() const { return F1.is_zero() && F2.is_zero(); }
  double lipschitz() const { return std::max(F1.lipschitz(), F2.lipschitz()); }
  ModulusNonlinearity modulus() const;
  /// max |F(a) - F(b)| / (L |a - b|) over random pairs for both profiles; <= 1.
  double lipschitz_spot_check(std::size_t samples, std::uint64_t seed) const;
};

/// Same scheme as simulate_forward with F1, F2 evaluated at the old level.
/// For the zero pair this is simulate_forward itself.
Trajectory solve_semilinear(const ForwardModel& model, const NonlinearityPair& nl, const ComplexGridField& z0,
                            const BrownianPath& path);

ObservationTrace observation_map(const ForwardModel& model, const NonlinearityPair& nl, const ComplexGridField& z0,
                                 const BrownianPath& path, const TraceOperator& op);

struct StabilityPair {
  ComplexGridField z0;
  ComplexGridField z0_hat;
};

/// z0 from the initial ensemble, z0_hat = z0 + w e_k with one eigenmode e_k
/// (cycling through the lowest `modes`) and a seeded complex weight w.
std::vector<StabilityPair> stability_pairs(const Mesh& mesh, std::size_t modes, std::size_t count, std::uint64_t seed);

struct StabilityLine {
  double num_sq = 0.0;  ///< |z0 - z0_hat|^2_{L^2}
  McEstimate den_sq;    ///< E |M(z0) - M(z0_hat)|^2_{Sigma0}
  double ratio = 0.0;   ///< sqrt(num_sq / den_sq); 0 for identical pairs
  bool trivial = false;
};

struct StabilityReport {
  std::vector<StabilityLine> lines;
  double max_ratio = 0.0;
  /// The zero pair is evaluated through the linear difference y = z - z_hat
  /// with homogeneous dynamics.
  bool linear_reduction = false;
};

StabilityReport stability_scan(const ForwardModel& model, const NonlinearityPair& nl,
                               const std::vector<StabilityPair>& pairs, const McOptions& mc,
                               TraceSelection selection = TraceSelection::Gamma0);

/// |M(z0) - M(z0_hat)|^2_{Sigma0} along one path from two separate solves.
double trace_difference_energy(const ForwardModel& model, const NonlinearityPair& nl, const ComplexGridField& z0,
                               const ComplexGridField& z0_hat, const BrownianPath& path, const TraceOperator& op);

struct ObservationRecord {
  std::uint64_t base_seed = 0;
  std::uint64_t path_index = 0;
  ObservationTrace trace;
  std::optional<BrownianPath> path;
};

ObservationRecord record_observation(const ForwardModel& model, const NonlinearityPair& nl, const ComplexGridField& z0,
                                     const BrownianPath& path, const TraceOperator& op, bool store_path = true);

/// The pathwise linear map A: u -> d_nu y|_{Gamma0} of the homogeneous linear
/// dynamics along a fixed Brownian path, and its adjoint with respect to the
/// L^2(G) and trace inner products.
class TraceMap {
 public:
  TraceMap(const ForwardModel& model, BrownianPath path, const TraceOperator& op);

  ObservationTrace apply(const ComplexGridField& u) const;
  ComplexGridField adjoint(const ObservationTrace& w) const;
  /// M(0) along the path with the model's sources (affine offset).
  ObservationTrace offset() const;
  /// Zero trace with the map's shape and weights.
  ObservationTrace zero_trace() const;
  /// sum |u|^2 cellvol style inner product <a, b> = cellvol sum a conj(b).
  cplx l2_inner(const ComplexGridField& a, const ComplexGridField& b) const;

  const ForwardModel& model() const { return model_; }
  const BrownianPath& path() const { return path_; }

 private:
  const ForwardModel& model_;
  BrownianPath path_;
  const TraceOperator& op_;
};

struct ObjectiveValue {
  double J = 0.0;
  double misfit = 0.0;   ///< 1/2 |A z + b - h|^2
  double penalty = 0.0;  ///< alpha/2 |z|^2_{L^2}
};

/// J(z) = 1/2 |M_path(z) - h|^2_{Sigma0} + alpha/2 |z|^2_{L^2} for linear dynamics.
class TikhonovObjective {
 public:
  TikhonovObjective(const TraceMap& map, ObservationTrace data, double alpha);

  ObjectiveValue value(const ComplexGridField& z) const;
  /// L^2 Riesz representative: dJ(z)[d] = Re <gradient(z), d>_{L^2}.
  ComplexGridField gradient(const ComplexGridField& z) const;

  const TraceMap& map() const { return map_; }
  const ObservationTrace& shifted_data() const { return data_; }
  double alpha() const { return alpha_; }

 private:
  const TraceMap& map_;
  ObservationTrace data_;  // h - M(0)
  double alpha_;
};

struct ReconstructionOptions {
  double alpha = 1e-6;
  int max_iter = 500;
  double rel_tol = 1e-8;
};

struct ReconstructionRow {
  int iteration = 0;
  double J = 0.0;
  double misfit = 0.0;
  double penalty = 0.0;
  double grad_norm = 0.0;
};

struct ReconstructionResult {
  ComplexGridField z0;
  std::vector<ReconstructionRow> history;
  bool converged = false;
  ObjectiveValue final_value;
};

/// Conjugate gradients on (A*A + alpha) z = A*(h - M(0)). Requires the record's
/// stored path and linear dynamics; returns the best iterate with a flag when
/// the tolerance is not reached.
ReconstructionResult reconstruct(const ForwardModel& model, const TraceOperator& op, const ObservationRecord& record,
                                 const ReconstructionOptions& options);

}  // namespace sselab
