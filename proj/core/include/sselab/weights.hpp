#pragma once

// Carleman weight functions
//
//   psi(x) = |x - x0|^2 + tau,
//   phi    = e^{4 lambda psi} / (t^2 (T - t)^2),
//   l      = s (e^{4 lambda psi} - e^{5 lambda |psi|_inf}) / (t^2 (T - t)^2),
//   theta  = e^l,
//
// together with the derived coefficients of the specialised weighted identity
// (beta = 1, b = identity, Psi = -Laplacian(l)). Everything is closed form;
// nothing here differentiates numerically.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "sselab/geometry.hpp"

namespace sselab {

struct CarlemanParams {
  double s = 1.0;
  double lambda = 1.0;
  std::optional<double> tau;  ///< empty: "auto" (select_tau)
  double T = 1.0;
};

/// Largest exponent magnitude any weight field is allowed to reach.
inline constexpr double kWeightLogCap = 700.0;

/// Smallest tau (>= floor) with tau + m >= 5/6 (tau + M), where m and M are
/// the min and max of |x - x0|^2 over the closed domain.
double select_tau(const Domain& domain, double floor = 1e-12);
double select_tau(const Mesh& mesh, double floor = 1e-12);

/// Parameters resolved against a domain: tau fixed, |psi|_inf known.
class WeightSetup {
 public:
  WeightSetup(const CarlemanParams& params, const Domain& domain);

  const CarlemanParams& params() const { return params_; }
  double s() const { return params_.s; }
  double lambda() const { return params_.lambda; }
  double T() const { return params_.T; }
  double tau() const { return tau_; }
  int dim() const { return dim_; }
  const Point& x0() const { return x0_; }
  double psi_min() const { return psi_min_; }
  double psi_max() const { return psi_max_; }
  /// 6 psi_min >= 5 psi_max; violated only for user-supplied tau.
  bool tau_admissible() const { return 6.0 * psi_min_ >= 5.0 * psi_max_ * (1.0 - 1e-14); }

  /// Upper bound of log|field| for all weight fields on [t_margin, T - t_margin].
  double log_magnitude_bound(double t_margin) const;
  /// Throws std::domain_error when log_magnitude_bound(t_margin) exceeds the cap.
  void check_cap(double t_margin) const;

  double psi(const Point& x) const;
  /// log(phi) = 4 lambda psi - 2 log(t (T - t)).
  double log_phi(double t, const Point& x) const;
  /// l = log(theta); computed so that it never overflows before the cap.
  double ell(double t, const Point& x) const;

 private:
  CarlemanParams params_;
  double tau_ = 0.0;
  int dim_ = 1;
  Point x0_{};
  double psi_min_ = 0.0;
  double psi_max_ = 0.0;
  std::array<double, 2> grad_psi_range_{};  // |grad psi| over the closed domain
};

using Mat2 = std::array<std::array<double, 2>, 2>;

struct CarlemanWeights {
  double psi = 0.0;
  Point grad_psi{};
  Mat2 hess_psi{};
  double phi = 0.0;
  double log_phi = 0.0;
  double ell = 0.0;
  double log_theta = 0.0;
  double ell_t = 0.0;
  double ell_tt = 0.0;
  Point grad_ell{};
  Mat2 hess_ell{};
  double lap_ell = 0.0;
  double Psi = 0.0;
  double A = 0.0;
  Point grad_A{};
  double bilap_ell = 0.0;
  double D = 0.0;
  Mat2 c{};
};

/// x e^{2 l} evaluated as sign(x) e^{2 l + log|x|}, flushed to zero below the
/// smallest normal double.
double theta2_times(double ell, double x);

/// All weight fields at (t, x), 0 < t < T. Throws std::domain_error at t = 0, T.
CarlemanWeights eval_weights(const WeightSetup& setup, double t, const Point& x);

/// D re-assembled from its defining parts:
/// l_tt + Lap(Psi) + 2 div(A grad l) + 2 A Psi.
double assemble_D(const CarlemanWeights& w, int dim);

/// Time nodes k dt, k = 1..steps-1 (those inside [dt/2, T - dt/2]).
std::vector<double> interior_time_grid(double T, int steps);

struct WeightBoundsReport {
  bool tau_admissible = true;
  // (a) |l_t| / (s phi^{3/2}) and |l_tt| / (s phi^2), sup over the sample, per lambda.
  std::vector<double> lambdas;
  std::vector<double> sup_lt_ratio;
  std::vector<double> sup_ltt_ratio;
  bool lt_unbounded_in_lambda = false;
  // (b) D / (s^3 lambda^4 phi^3 |grad psi|^4), min over the sample, per (lambda, s).
  std::vector<double> s_values;
  std::vector<std::vector<double>> min_D_ratio;  // [lambda][s]
  std::vector<std::optional<double>> s_threshold;  // per lambda
  std::optional<double> lambda_threshold;
  // (c) min over random complex gradients of sum c^{jk}(v_j conj v_k + v_k conj v_j)
  //     / (s lambda phi |v|^2)
  double min_c_quotient = 0.0;
  std::size_t c_samples = 0;
};

struct WeightBoundsOptions {
  std::vector<double> lambdas{1.0, 2.0, 4.0, 8.0};
  std::vector<double> s_values{1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
  std::size_t gradient_samples = 64;
  unsigned long long seed = 1;
};

/// Weight bounds sampled on mesh nodes x t_grid. All ratios are evaluated in
/// log space so that large lambda does not overflow.
WeightBoundsReport check_weight_bounds(const CarlemanParams& params, const Mesh& mesh,
                                       const std::vector<double>& t_grid,
                                       const WeightBoundsOptions& options = {});

/// |l_t| / (s phi^{3/2}); s cancels analytically.
double lt_ratio(const WeightSetup& setup, double t, const Point& x);
/// |l_tt| / (s phi^2).
double ltt_ratio(const WeightSetup& setup, double t, const Point& x);
/// D / (s^3 lambda^4 phi^3 |grad psi|^4).
double D_ratio(const WeightSetup& setup, double t, const Point& x);
/// c^{jk} / (s lambda phi), s and phi free.
Mat2 normalized_c(const WeightSetup& setup, const Point& x);

}  // namespace sselab
