#pragma once

// Pointwise verification of the multiplier identity and of the weighted
// (Carleman) identity for i beta z_t + sum_{jk} (b^{jk} z_j)_k, in their
// deterministic specialisation dz = z_t dt, plus the integrated bookkeeping of
// the time flux M on simulated paths.
//
// Fields are supplied as jet callbacks: a callback receives the jets of
// (t, x1, x2) and returns the jet of the field, so composite expressions carry
// exact derivatives up to order four.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sselab/brownian.hpp"
#include "sselab/coefficients.hpp"
#include "sselab/geometry.hpp"
#include "sselab/jet.hpp"
#include "sselab/simulator.hpp"
#include "sselab/weights.hpp"

namespace sselab {

using JetPoint = std::array<RealJet, 3>;
using RealJetFn = std::function<RealJet(const JetPoint&)>;
using ComplexJetFn = std::function<ComplexJet(const JetPoint&)>;

/// Sample point (t, x1, x2).
struct SpaceTimePoint {
  double t = 0.0;
  Point x{};
};

/// Uniform random points in [t_lo, t_hi] x domain.
std::vector<SpaceTimePoint> random_sample_points(const Domain& domain, double t_lo, double t_hi,
                                                 std::size_t count, std::uint64_t seed);

enum class DerivativeMode { Analytic, FiniteDifference };

/// C^1 vector field on the closure whose normal component is 1 on the boundary.
struct MultiplierField {
  int dim = 1;
  std::array<RealJetFn, 2> mu;

  /// mu_a = 2 (x_a - lo_a) / L_a - 1 (in 1D on (0,1): 2x - 1).
  static MultiplierField affine(const Domain& domain);
  /// max over boundary nodes of |mu . nu - 1|.
  double normal_mismatch(const Mesh& mesh) const;
};

/// Manufactured smooth complex field, polynomial in t times trigonometric in x.
ComplexJetFn manufactured_field(int dim);
/// The field (1 + i t) sin(pi x).
ComplexJetFn manufactured_sine();

struct TermMagnitude {
  std::string name;
  double max_abs = 0.0;
  SpaceTimePoint where{};
};

struct IdentityResidual {
  double max_abs = 0.0;        ///< max |LHS - RHS|
  double max_relative = 0.0;   ///< max |LHS - RHS| / (largest term magnitude at that point)
  SpaceTimePoint worst{};
  std::vector<TermMagnitude> terms;
};

/// Finite-difference step used by DerivativeMode::FiniteDifference.
struct FdOptions {
  double h = 0.02;
};

IdentityResidual multiplier_identity_residual(const MultiplierField& mu, const ComplexJetFn& z,
                                              const std::vector<SpaceTimePoint>& points,
                                              DerivativeMode mode = DerivativeMode::Analytic,
                                              FdOptions fd = {});

/// Inputs of the weighted identity: beta, symmetric b^{jk}, l, Psi, z.
class GeneralIdentityInputs {
 public:
  /// Rejects non-symmetric b and callbacks whose first derivatives disagree
  /// with central differences of their values at the probe points.
  GeneralIdentityInputs(int dim, RealJetFn beta, std::array<std::array<RealJetFn, 2>, 2> b, RealJetFn ell,
                        RealJetFn Psi, ComplexJetFn z, const std::vector<SpaceTimePoint>& probes);

  /// beta = 1, b = identity, l from the weight setup, Psi = -Lap l.
  static GeneralIdentityInputs specialized(const WeightSetup& setup, ComplexJetFn z,
                                           const std::vector<SpaceTimePoint>& probes);

  int dim() const { return dim_; }
  const RealJetFn& beta() const { return beta_; }
  const RealJetFn& b(int j, int k) const { return b_[j][k]; }
  const RealJetFn& ell() const { return ell_; }
  const RealJetFn& Psi() const { return Psi_; }
  const ComplexJetFn& z() const { return z_; }

 private:
  int dim_;
  RealJetFn beta_;
  std::array<std::array<RealJetFn, 2>, 2> b_;
  RealJetFn ell_, Psi_;
  ComplexJetFn z_;
};

/// beta = 1 + t x1 / 5, b = diag(1, 2) (or 1 in 1D), smooth l and Psi.
GeneralIdentityInputs general_identity_example(int dim, const std::vector<SpaceTimePoint>& probes);

IdentityResidual carleman_identity_residual(const GeneralIdentityInputs& inputs,
                                            const std::vector<SpaceTimePoint>& points,
                                            DerivativeMode mode = DerivativeMode::Analytic,
                                            FdOptions fd = {});

/// Coefficient fields of the weighted identity at one point.
struct IdentityCoefficients {
  double A = 0.0;
  double D = 0.0;
  Mat2 c{};
  /// beta Psi + sum (beta b^{jk} l_j)_k, the factor of i (conj(v) dv - v d conj(v)).
  double phase_coefficient = 0.0;
};

IdentityCoefficients identity_coefficients(const GeneralIdentityInputs& inputs, const SpaceTimePoint& p);

struct MCheckOptions {
  /// Time margins; the telescoped flux is taken between the nodes nearest to
  /// delta and T - delta.
  std::vector<double> margins;
};

struct MCheckResult {
  std::vector<double> margins;
  std::vector<double> normalized;  ///< max over paths, per margin
};

/// Integrated flux bookkeeping: |int_G M(T - delta) - int_G M(delta)| normalised
/// by the peak over time of int_G |M| along the path, for
/// M = l_t |v|^2 + i sum_j l_j (conj(v)_j v - v_j conj(v)), v = theta y.
MCheckResult integrated_M_check(const ForwardModel& model, const CarlemanParams& params,
                                const ComplexGridField& y0, std::uint64_t base_seed, std::size_t paths,
                                const MCheckOptions& options, unsigned threads = 1);

/// The same for a single stored trajectory.
std::vector<double> integrated_M_check(const ForwardModel& model, const WeightSetup& setup,
                                       const Trajectory& trajectory, const std::vector<double>& margins);

}  // namespace sselab
