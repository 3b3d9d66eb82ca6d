#include "sselab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace sselab {

namespace {

double squared_norm(const Point& p, int dim) {
  double r = 0.0;
  for (int a = 0; a < dim; ++a) r += p[a] * p[a];
  return r;
}

// Time factor of l_tt: d^2/dt^2 (t (T - t))^{-2} = (20 t^2 - 20 t T + 6 T^2) / q^4.
double ltt_poly(double t, double T) { return 20.0 * t * t - 20.0 * t * T + 6.0 * T * T; }

}  // namespace

double select_tau(const Domain& domain, double floor) {
  const auto [m, M] = domain.squared_distance_range();
  return std::max(floor, 5.0 * M - 6.0 * m);
}

double select_tau(const Mesh& mesh, double floor) { return select_tau(mesh.domain(), floor); }

WeightSetup::WeightSetup(const CarlemanParams& params, const Domain& domain)
    : params_(params), dim_(domain.dim), x0_(domain.x0) {
  if (!(params.s > 0.0) || !(params.lambda > 0.0) || !(params.T > 0.0))
    throw std::invalid_argument("Carleman parameters s, lambda, T must be positive");
  if (params.tau && !(*params.tau > 0.0)) throw std::invalid_argument("tau must be positive");
  tau_ = params.tau ? *params.tau : select_tau(domain);
  const auto [m, M] = domain.squared_distance_range();
  psi_min_ = tau_ + m;
  psi_max_ = tau_ + M;
  grad_psi_range_ = {2.0 * std::sqrt(m), 2.0 * std::sqrt(M)};
}

double WeightSetup::psi(const Point& x) const {
  double r = tau_;
  for (int a = 0; a < dim_; ++a) r += (x[a] - x0_[a]) * (x[a] - x0_[a]);
  return r;
}

double WeightSetup::log_phi(double t, const Point& x) const {
  const double q = t * (T() - t);
  return 4.0 * lambda() * psi(x) - 2.0 * std::log(q);
}

double WeightSetup::ell(double t, const Point& x) const {
  const double q = t * (T() - t);
  const double e5 = 5.0 * lambda() * psi_max_;
  const double gap = -std::expm1(4.0 * lambda() * psi(x) - e5);
  return -s() * std::exp(e5 - 2.0 * std::log(q)) * gap;
}

double WeightSetup::log_magnitude_bound(double t_margin) const {
  const double T = params_.T;
  if (!(t_margin > 0.0) || !(t_margin < 0.5 * T))
    throw std::invalid_argument("time margin must lie in (0, T/2)");
  const double L = -std::log(t_margin * (T - t_margin));
  const double ls = std::log(s());
  const double ll = std::log(lambda());
  const double lpm = lambda() * psi_max_;
  const double G = std::max(grad_psi_range_[1], 1e-300);
  const double n = dim_;
  const double w = 4.0 * lambda() * (4.0 * lambda() * G * G + 2.0 * n);
  const double bilap = w * w + 512.0 * std::pow(lambda(), 3) * G * G + 128.0 * n * lambda() * lambda();
  const double lead = 1024.0 * std::pow(G, 4) + 512.0 * G * G / lambda();
  const std::array<double, 6> logs{
      ls + 5.0 * lpm + 2.0 * L,                                             // l
      ls + 5.0 * lpm + 4.0 * L + std::log(6.0 * T * T + 1.0),               // l_tt
      ls + 4.0 * lpm + 2.0 * L + std::log(w + 1.0),                         // Lap l
      2.0 * ls + 2.0 * ll + 8.0 * lpm + 4.0 * L + std::log(16.0 * G * G * (8.0 * lambda() * G * G + 4.0) + 1.0),
      ls + 4.0 * lpm + 2.0 * L + std::log(bilap + 1.0),                     // Lap^2 l
      3.0 * ls + 4.0 * ll + 12.0 * lpm + 6.0 * L + std::log(lead + 1.0),   // D
  };
  return *std::max_element(logs.begin(), logs.end());
}

void WeightSetup::check_cap(double t_margin) const {
  const double bound = log_magnitude_bound(t_margin);
  if (bound > kWeightLogCap) {
    std::ostringstream msg;
    msg << "Carleman parameters s=" << s() << ", lambda=" << lambda()
        << " exceed the representable range (log magnitude " << bound << " > "
        << kWeightLogCap << ", |psi|_inf=" << psi_max_ << ")";
    throw std::domain_error(msg.str());
  }
}

double theta2_times(double ell, double x) {
  if (x == 0.0) return 0.0;
  const double e = 2.0 * ell + std::log(std::abs(x));
  if (e < std::log(std::numeric_limits<double>::min())) return 0.0;
  return std::copysign(std::exp(e), x);
}

CarlemanWeights eval_weights(const WeightSetup& setup, double t, const Point& x) {
  const double T = setup.T();
  if (!(t > 0.0 && t < T)) throw std::domain_error("weights are singular at t = 0 and t = T");
  const int n = setup.dim();
  const double s = setup.s();
  const double lam = setup.lambda();
  const double q = t * (T - t);

  CarlemanWeights w;
  w.psi = setup.psi(x);
  for (int a = 0; a < n; ++a) {
    w.grad_psi[a] = 2.0 * (x[a] - setup.x0()[a]);
    w.hess_psi[a][a] = 2.0;
  }
  const double g2 = squared_norm(w.grad_psi, n);

  w.log_phi = setup.log_phi(t, x);
  w.phi = std::exp(w.log_phi);
  w.ell = setup.ell(t, x);
  w.log_theta = w.ell;
  w.ell_t = w.ell * 2.0 * (2.0 * t - T) / q;
  w.ell_tt = w.ell * ltt_poly(t, T) / (q * q);

  const double slp = s * lam * w.phi;
  for (int j = 0; j < n; ++j) {
    w.grad_ell[j] = 4.0 * slp * w.grad_psi[j];
    for (int k = 0; k <= j; ++k)  // lower half, mirrored so the Hessian is exactly symmetric
      w.hess_ell[j][k] = w.hess_ell[k][j] =
          16.0 * slp * lam * w.grad_psi[j] * w.grad_psi[k] + 4.0 * slp * w.hess_psi[j][k];
  }
  w.lap_ell = 0.0;
  for (int j = 0; j < n; ++j) w.lap_ell += w.hess_ell[j][j];
  w.Psi = -w.lap_ell;

  // A = sum l_j^2 - sum l_jj - Psi
  double grad_ell_sq = 0.0;
  for (int j = 0; j < n; ++j) grad_ell_sq += w.grad_ell[j] * w.grad_ell[j];
  w.A = grad_ell_sq - w.lap_ell - w.Psi;
  const double grad_A_scale = 16.0 * s * s * lam * lam * w.phi * w.phi * (8.0 * lam * g2 + 4.0);
  for (int j = 0; j < n; ++j) w.grad_A[j] = grad_A_scale * w.grad_psi[j];

  const double wq = 4.0 * lam * (4.0 * lam * g2 + 2.0 * n);
  w.bilap_ell = s * w.phi * (wq * wq + 512.0 * lam * lam * lam * g2 + 128.0 * n * lam * lam);

  const double s3l3p3 = s * s * s * lam * lam * lam * w.phi * w.phi * w.phi;
  w.D = w.ell_tt - w.bilap_ell + 1024.0 * s3l3p3 * lam * g2 * g2 + 512.0 * s3l3p3 * g2;

  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      w.c[j][k] = 2.0 * w.hess_ell[j][k] - (j == k ? w.lap_ell + w.Psi : 0.0);
  return w;
}

double assemble_D(const CarlemanWeights& w, int dim) {
  double div_A_grad_ell = w.A * w.lap_ell;
  for (int j = 0; j < dim; ++j) div_A_grad_ell += w.grad_A[j] * w.grad_ell[j];
  const double lap_Psi = -w.bilap_ell;
  return w.ell_tt + lap_Psi + 2.0 * div_A_grad_ell + 2.0 * w.A * w.Psi;
}

std::vector<double> interior_time_grid(double T, int steps) {
  std::vector<double> ts;
  const double dt = T / steps;
  for (int k = 1; k < steps; ++k) ts.push_back(k * dt);
  return ts;
}

double lt_ratio(const WeightSetup& setup, double t, const Point& x) {
  const double lam = setup.lambda();
  const double psi = setup.psi(x);
  const double e5 = 5.0 * lam * setup.psi_max();
  const double gap = -std::expm1(4.0 * lam * psi - e5);
  return std::abs(2.0 * (2.0 * t - setup.T())) * std::exp(e5 - 6.0 * lam * psi) * gap;
}

double ltt_ratio(const WeightSetup& setup, double t, const Point& x) {
  const double lam = setup.lambda();
  const double psi = setup.psi(x);
  const double e5 = 5.0 * lam * setup.psi_max();
  const double gap = -std::expm1(4.0 * lam * psi - e5);
  return std::abs(ltt_poly(t, setup.T())) * std::exp(e5 - 8.0 * lam * psi) * gap;
}

double D_ratio(const WeightSetup& setup, double t, const Point& x) {
  const int n = setup.dim();
  const double s = setup.s();
  const double lam = setup.lambda();
  const double T = setup.T();
  const double q = t * (T - t);
  const double psi = setup.psi(x);
  double g2 = 0.0;
  for (int a = 0; a < n; ++a) g2 += 4.0 * (x[a] - setup.x0()[a]) * (x[a] - setup.x0()[a]);
  const double log_g4 = 2.0 * std::log(g2);
  const double log_phi = 4.0 * lam * psi - 2.0 * std::log(q);
  const double wq = 4.0 * lam * (4.0 * lam * g2 + 2.0 * n);
  const double P = wq * wq + 512.0 * lam * lam * lam * g2 + 128.0 * n * lam * lam;
  const double bilap_term =
      std::exp(std::log(P) - 2.0 * std::log(s) - 4.0 * std::log(lam) - 2.0 * log_phi - log_g4);
  const double e5 = 5.0 * lam * setup.psi_max();
  const double gap = -std::expm1(4.0 * lam * psi - e5);
  const double ltt_term = -gap * ltt_poly(t, T) *
                          std::exp(e5 - 12.0 * lam * psi + 2.0 * std::log(q) - 2.0 * std::log(s) -
                                   4.0 * std::log(lam) - log_g4);
  return 1024.0 + 512.0 / (lam * g2) - bilap_term + ltt_term;
}

Mat2 normalized_c(const WeightSetup& setup, const Point& x) {
  const int n = setup.dim();
  const double lam = setup.lambda();
  Point g{};
  for (int a = 0; a < n; ++a) g[a] = 2.0 * (x[a] - setup.x0()[a]);
  // l_jk / (s lambda phi) = 16 lambda psi_j psi_k + 4 psi_jk
  Mat2 hess{};
  double lap = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) hess[j][k] = 16.0 * lam * g[j] * g[k] + (j == k ? 8.0 : 0.0);
    lap += hess[j][j];
  }
  const double Psi = -lap;
  Mat2 c{};
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) c[j][k] = 2.0 * hess[j][k] - (j == k ? lap + Psi : 0.0);
  return c;
}

WeightBoundsReport check_weight_bounds(const CarlemanParams& params, const Mesh& mesh,
                                       const std::vector<double>& t_grid,
                                       const WeightBoundsOptions& options) {
  WeightBoundsReport rep;
  std::vector<Point> xs;
  for (std::size_t id = 0; id < mesh.node_count(); ++id) xs.push_back(mesh.position(id));

  rep.lambdas = options.lambdas;
  std::sort(rep.lambdas.begin(), rep.lambdas.end());
  rep.s_values = options.s_values;
  std::sort(rep.s_values.begin(), rep.s_values.end());

  for (double lam : rep.lambdas) {
    CarlemanParams p = params;
    p.lambda = lam;
    const WeightSetup setup(p, mesh.domain());
    rep.tau_admissible = rep.tau_admissible && setup.tau_admissible();
    double sup_t = 0.0;
    double sup_tt = 0.0;
    for (double t : t_grid)
      for (const auto& x : xs) {
        sup_t = std::max(sup_t, lt_ratio(setup, t, x));
        sup_tt = std::max(sup_tt, ltt_ratio(setup, t, x));
      }
    rep.sup_lt_ratio.push_back(sup_t);
    rep.sup_ltt_ratio.push_back(sup_tt);

    std::vector<double> row;
    for (double s : rep.s_values) {
      CarlemanParams ps = p;
      ps.s = s;
      const WeightSetup ss(ps, mesh.domain());
      double mn = std::numeric_limits<double>::infinity();
      for (double t : t_grid)
        for (const auto& x : xs) mn = std::min(mn, D_ratio(ss, t, x));
      row.push_back(mn);
    }
    std::optional<double> thr;
    for (std::size_t k = rep.s_values.size(); k-- > 0;) {
      if (row[k] >= 1.0) thr = rep.s_values[k];
      else break;
    }
    rep.min_D_ratio.push_back(std::move(row));
    rep.s_threshold.push_back(thr);
  }
  for (std::size_t k = rep.lambdas.size(); k-- > 0;) {
    if (rep.s_threshold[k]) rep.lambda_threshold = rep.lambdas[k];
    else break;
  }
  // Without the 5/6 constraint the ratio grows like e^{lambda (5 psi_max - 6 psi_min)}.
  if (!rep.tau_admissible) rep.lt_unbounded_in_lambda = true;

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  rep.min_c_quotient = std::numeric_limits<double>::infinity();
  const int n = mesh.dim();
  for (double lam : rep.lambdas) {
    CarlemanParams p = params;
    p.lambda = lam;
    const WeightSetup setup(p, mesh.domain());
    for (const auto& x : xs) {
      const Mat2 c = normalized_c(setup, x);
      for (std::size_t r = 0; r < options.gradient_samples; ++r) {
        std::array<std::complex<double>, 2> v{};
        double vv = 0.0;
        for (int a = 0; a < n; ++a) {
          v[a] = {normal(rng), normal(rng)};
          vv += std::norm(v[a]);
        }
        double form = 0.0;
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            form += c[j][k] * 2.0 * (v[j] * std::conj(v[k])).real();
        rep.min_c_quotient = std::min(rep.min_c_quotient, form / vv);
        ++rep.c_samples;
      }
    }
  }
  return rep;
}

}  // namespace sselab
