#pragma once

// Forward stochastic Schrödinger solver
//
//   i dy + Lap y dt = (a1.grad y + a2 y + f) dt + (a3 y + g) dB,   y = 0 on the boundary,
//
// discretised by Crank–Nicolson in the Laplacian and explicit Itô (old time
// level) in every other term:
//
//   (I - i dt/2 Lap_h) y^{n+1} = (I + i dt/2 Lap_h) y^n
//                                - i dt (a1.grad_h y^n + a2 y^n + f^n + F1(|y^n|))
//                                - i dB_n (a3 y^n + g^n + F2(|y^n|)).
//
// Lap_h is the 3-point / 5-point Laplacian, grad_h the central difference.

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "sselab/brownian.hpp"
#include "sselab/coefficients.hpp"
#include "sselab/geometry.hpp"

namespace sselab {

/// Pointwise modulus nonlinearities F1: R -> C (drift) and F2: R -> R (noise).
struct ModulusNonlinearity {
  std::function<cplx(double)> F1;
  std::function<double(double)> F2;
};

struct Trajectory {
  double dt = 0.0;
  std::vector<ComplexGridField> states;  ///< states[n] = y(n dt), n = 0..steps

  int steps() const { return static_cast<int>(states.size()) - 1; }
  double time(int n) const { return n * dt; }
};

class ForwardModel {
 public:
  ForwardModel(const Mesh& mesh, const Coefficients& coeffs, double T, int steps);

  const Mesh& mesh() const { return coeffs_.mesh(); }
  const SampledCoefficients& coefficients() const { return coeffs_; }
  double T() const { return T_; }
  int steps() const { return steps_; }
  double dt() const { return T_ / steps_; }
  std::size_t size() const { return mesh().interior_count(); }
  bool linear_homogeneous() const { return !coeffs_.has_f() && !coeffs_.has_g(); }

  /// out = Lap_h y (Dirichlet zeros outside).
  void laplacian(const ComplexGridField& y, ComplexGridField& out) const;
  /// out = grad_h y along an axis (central difference).
  void gradient(const ComplexGridField& y, int axis, ComplexGridField& out) const;
  /// Solves (I - i dt/2 Lap_h) x = rhs in place.
  void solve(ComplexGridField& x) const;
  /// Solves (I - i dt/2 Lap_h)^H x = rhs in place.
  void solve_adjoint(ComplexGridField& x) const;

  /// One step from level n. Sources are skipped when `homogeneous` is set.
  void step(int n, const ComplexGridField& y, double dB, ComplexGridField& out,
            const ModulusNonlinearity* nl = nullptr, bool homogeneous = false) const;
  /// Adjoint of the linear homogeneous step from level n: out = (S^{-1} K_n)^H lam.
  void step_adjoint(int n, const ComplexGridField& lam, double dB, ComplexGridField& out) const;

 private:
  SampledCoefficients coeffs_;
  double T_;
  int steps_;
  // 1D: LU factors of the constant tridiagonal Cayley matrix.
  std::vector<cplx> thomas_c_, thomas_inv_;
  cplx off_diag_{};
  // 2D: sparse factorisation.
  struct Sparse;
  std::shared_ptr<const Sparse> sparse_;
};

/// Called with (n, t_n, y^n) for n = 0..steps.
using StateObserver = std::function<void(int, double, const ComplexGridField&)>;

/// Runs the scheme along `path`; path.steps() must equal model.steps().
void simulate_forward(const ForwardModel& model, const ComplexGridField& y0, const BrownianPath& path,
                      const StateObserver& observe, const ModulusNonlinearity* nl = nullptr,
                      bool homogeneous = false);

Trajectory simulate_forward(const ForwardModel& model, const ComplexGridField& y0,
                            const BrownianPath& path, const ModulusNonlinearity* nl = nullptr,
                            bool homogeneous = false);

/// Convenience overload building the model.
Trajectory simulate_forward(const Mesh& mesh, const Coefficients& coeffs, const ComplexGridField& y0,
                            const BrownianPath& path, int steps);

struct GridNorms {
  double l2_sq = 0.0;
  double h1_sq = 0.0;  ///< l2_sq + discrete gradient energy
};

/// l2_sq = sum |y|^2 cellvol; gradient energy from forward differences over
/// every mesh edge, boundary edges included.
GridNorms norms(const Mesh& mesh, const ComplexGridField& y);

/// Boundary nodes whose normal derivatives are observed.
enum class TraceSelection { Gamma0, FullBoundary };

/// Linear map interior field -> outward normal derivative at selected boundary
/// nodes, (-4 y_{b-1} + y_{b-2}) / (2h) along the inward normal.
class TraceOperator {
 public:
  TraceOperator(const Mesh& mesh, TraceSelection selection);
  TraceOperator(const Mesh& mesh, std::vector<std::size_t> boundary_ids);

  std::size_t size() const { return rows_.size(); }
  std::span<const std::size_t> node_ids() const { return ids_; }
  std::span<const double> surface_weights() const { return surface_; }

  Eigen::VectorXcd apply(const ComplexGridField& y) const;
  /// Accumulates Tr^H (scale .* w) into out.
  void apply_adjoint_add(const Eigen::VectorXcd& w, std::span<const double> scale,
                         ComplexGridField& out) const;
  /// sum_b surface_b |(Tr y)_b|^2
  double energy(const ComplexGridField& y) const;

 private:
  struct Row {
    long k1, k2;  // interior numbers of the inward neighbours (-1: boundary)
    double inv_2h;
  };
  void build(const Mesh& mesh);
  std::vector<std::size_t> ids_;
  std::vector<double> surface_;
  std::vector<Row> rows_;
};

/// Normal-derivative time series on observed nodes with the surface-time
/// quadrature weights of the trapezoidal rule on [0, T].
struct ObservationTrace {
  std::vector<double> times;
  std::vector<std::size_t> node_ids;
  Eigen::MatrixXcd values;  ///< [time][node]
  std::vector<double> time_weights;
  std::vector<double> surface_weights;

  /// sum_n sum_b w_n w_b |h_nb|^2
  double energy() const;
  /// Weighted inner product sum w_n w_b a conj(b).
  cplx inner(const ObservationTrace& other) const;
};

/// Trapezoidal weights on n = 0..steps.
std::vector<double> trapezoid_weights(double dt, int steps);

ObservationTrace normal_trace(const Mesh& mesh, const Trajectory& trajectory,
                              TraceSelection selection = TraceSelection::Gamma0);
ObservationTrace normal_trace(const TraceOperator& op, const Trajectory& trajectory);

/// Dirichlet Laplacian eigenmode prod_a sin(k_a pi (x_a - lo_a) / L_a) on interior nodes.
ComplexGridField dirichlet_mode(const Mesh& mesh, std::array<int, 2> k);
/// Its eigenvalue for -Lap_h.
double dirichlet_mode_eigenvalue(const Mesh& mesh, std::array<int, 2> k);
/// Modes sorted by discrete eigenvalue, the first `count` of them.
std::vector<std::array<int, 2>> lowest_modes(const Mesh& mesh, std::size_t count);

}  // namespace sselab
