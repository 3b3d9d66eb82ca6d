#pragma once

// Monte Carlo evaluation of the weighted (Carleman) functionals, the
// observability and hidden-regularity quotients, the energy estimate and the
// unique-continuation scan.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sselab/brownian.hpp"
#include "sselab/simulator.hpp"
#include "sselab/weights.hpp"

namespace sselab {

struct McOptions {
  std::uint64_t base_seed = 1;
  std::size_t paths = 500;
  unsigned threads = 1;
};

/// True when no term of the model is driven by dB.
bool noise_free(const ForwardModel& model, const ModulusNonlinearity* nl = nullptr);

/// Runs a per-path job over the configured paths; noise-free models evaluate a
/// single deterministic path and report zero standard error.
std::vector<McEstimate> run_paths(const ForwardModel& model, const McOptions& mc, std::size_t dims,
                                  const std::function<std::vector<double>(const BrownianPath&)>& job,
                                  const ModulusNonlinearity* nl = nullptr);

/// int_0^T sum_b |d_nu y|^2 dt along one path (trapezoid in t, surface weights on nodes).
double trace_energy(const ForwardModel& model, const ComplexGridField& y0, const BrownianPath& path,
                    const TraceOperator& op, bool homogeneous = false, const ModulusNonlinearity* nl = nullptr);

McEstimate boundary_trace_energy(const ForwardModel& model, const ComplexGridField& y0, const McOptions& mc,
                                 const TraceOperator& op, bool homogeneous = false);

/// H^1 norm squared of a field given at every mesh node (boundary values kept),
/// gradient energy from forward differences.
double all_node_h1_sq(const Mesh& mesh, const Eigen::VectorXcd& values);

struct SourceNorms {
  double f_h1_sq = 0.0;  ///< int_0^T |f|^2_{H^1_0} dt
  double g_h1_sq = 0.0;  ///< int_0^T |g|^2_{H^1} dt (one-sided gradients at the boundary)
};
SourceNorms source_norms(const ForwardModel& model);

struct CarlemanSides {
  double s = 0.0;
  double lambda = 0.0;
  McEstimate lhs;         ///< E int theta^2 (s^3 l^4 phi^3 |y|^2 + s l phi |grad y|^2)
  McEstimate rhs_f;       ///< E int theta^2 |f|^2
  McEstimate rhs_g;       ///< rhs_g_main + rhs_g_grad, the latter dropped for real g
  McEstimate rhs_g_main;  ///< E int theta^2 s^2 l^2 phi^2 |g|^2
  McEstimate rhs_g_grad;  ///< E int theta^2 |grad g|^2
  McEstimate rhs_bdy;     ///< E int_{Sigma0} theta^2 s l phi |d_nu y|^2
  bool g_real = false;
  /// lhs / rhs_bdy, empty when rhs_bdy vanishes.
  std::optional<double> ratio;
};

/// Per-path values {lhs, rhs_f, rhs_g_main, rhs_g_grad, rhs_bdy} on a stored
/// trajectory; time quadrature is trapezoidal over the interior nodes t_1 .. t_{N-1}.
std::array<double, 5> carleman_functionals(const ForwardModel& model, const WeightSetup& setup,
                                           const Trajectory& trajectory, const TraceOperator& op);

CarlemanSides carleman_sides(const ForwardModel& model, const ComplexGridField& y0, const CarlemanParams& params,
                             const McOptions& mc, TraceSelection selection = TraceSelection::Gamma0);

struct QuotientReport {
  double numerator = 0.0;
  double denominator = 0.0;
  double quotient = 0.0;
  double se = 0.0;
  std::string fingerprint;
  /// 0 / 0: reported as consistent, quotient set to 0.
  bool trivial = false;
  /// nonzero / 0: would contradict unique continuation.
  bool ucp_violation = false;
};

QuotientReport make_quotient(double numerator, McEstimate denominator, std::string fingerprint);

/// Members sum_k c_k e_k over the `modes` lowest Dirichlet modes e_k with
/// standard complex Gaussian c_k. The weights depend on (seed, member) only,
/// so the same ensemble is reproduced on every mesh.
std::vector<ComplexGridField> initial_ensemble(const Mesh& mesh, std::size_t modes, std::size_t members,
                                               std::uint64_t seed);
/// The complex weights used by initial_ensemble.
std::vector<cplx> ensemble_weights(std::size_t modes, std::uint64_t seed, std::size_t member);

/// Per member: |y0|^2_{H^1_0} / (sqrt(E |d_nu y|^2_{Sigma0}) + |f| + |g|)^2.
struct ObservabilityReport {
  std::vector<QuotientReport> members;
  double max_quotient = 0.0;
};
ObservabilityReport observability_quotient(const ForwardModel& model, const std::vector<ComplexGridField>& ensemble,
                                           const McOptions& mc, TraceSelection selection = TraceSelection::Gamma0);

/// E |d_nu y|^2 over the whole boundary / (|y0|^2_{H^1_0} + |f|^2 + |g|^2).
QuotientReport hidden_regularity_quotient(const ForwardModel& model, const ComplexGridField& y0, const McOptions& mc);

struct EnergyCheckReport {
  std::vector<double> times;
  std::vector<McEstimate> energy;  ///< E |y(t)|^2_{H^1_0}
  double worst_ratio = 0.0;
  double worst_t = 0.0;
  double worst_s = 0.0;
  bool vacuous = false;
};
/// Worst E|y(t)|^2 / (E|y(s)|^2 + sources between s and t) over all ordered
/// pairs t != s of `intervals` + 1 equispaced times.
EnergyCheckReport energy_check(const ForwardModel& model, const ComplexGridField& y0, const McOptions& mc,
                               int intervals = 8);

struct UcpReport {
  std::vector<McEstimate> energy;  ///< per member, y0 normalised to |y0|_{H^1_0} = 1
  double min_energy = 0.0;
  std::size_t argmin = 0;
};
/// Sources are ignored (homogeneous dynamics).
UcpReport ucp_scan(const ForwardModel& model, const std::vector<ComplexGridField>& ensemble, const McOptions& mc,
                   const TraceOperator& observed);

}  // namespace sselab
