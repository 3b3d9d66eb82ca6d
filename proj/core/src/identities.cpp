#include "sselab/identities.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace sselab {

namespace {

constexpr cplx kI{0.0, 1.0};

JetPoint jet_point(const SpaceTimePoint& p) {
  return {RealJet::variable(0, p.t), RealJet::variable(1, p.x[0]), RealJet::variable(2, p.x[1])};
}

// Values are always taken through full jets: callbacks such as Psi = -Lap l
// differentiate internally.
JetPoint constant_point(const SpaceTimePoint& p) { return jet_point(p); }

SpaceTimePoint shifted(const SpaceTimePoint& p, int var, double h) {
  SpaceTimePoint q = p;
  if (var == 0)
    q.t += h;
  else
    q.x[var - 1] += h;
  return q;
}

std::string describe(const SpaceTimePoint& p) {
  std::ostringstream s;
  s.precision(6);
  s << "(t=" << p.t << ", x=" << p.x[0] << ", " << p.x[1] << ")";
  return s.str();
}

int variable_count(int dim) { return 1 + dim; }

/// Jet of z with coefficients up to degree two taken from second-order
/// central differences of its values; higher coefficients are zero.
ComplexJet fd_jet(const ComplexJetFn& z, const SpaceTimePoint& p, int dim, double h) {
  auto val = [&](const SpaceTimePoint& q) { return z(constant_point(q)).value(); };
  ComplexJet j(val(p));
  const int nv = variable_count(dim);
  const cplx f0 = j.value();
  for (int a = 0; a < nv; ++a) {
    const cplx fp = val(shifted(p, a, h));
    const cplx fm = val(shifted(p, a, -h));
    jet_detail::MultiIndex m{0, 0, 0};
    m[a] = 1;
    j.coeff(jet_detail::find(jet_detail::kTables, m)) = (fp - fm) / (2.0 * h);
    m[a] = 2;
    j.coeff(jet_detail::find(jet_detail::kTables, m)) = (fp - 2.0 * f0 + fm) / (2.0 * h * h);
    for (int b = a + 1; b < nv; ++b) {
      const cplx fpp = val(shifted(shifted(p, a, h), b, h));
      const cplx fpm = val(shifted(shifted(p, a, h), b, -h));
      const cplx fmp = val(shifted(shifted(p, a, -h), b, h));
      const cplx fmm = val(shifted(shifted(p, a, -h), b, -h));
      jet_detail::MultiIndex mm{0, 0, 0};
      mm[a] = 1;
      mm[b] = 1;
      j.coeff(jet_detail::find(jet_detail::kTables, mm)) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
    }
  }
  return j;
}

/// Collects named term magnitudes and the residual at each point.
class ResidualAccumulator {
 public:
  void point(const SpaceTimePoint& p, cplx residual, const std::vector<std::pair<const char*, cplx>>& terms) {
    double scale = 0.0;
    if (terms_.empty())
      for (const auto& [name, v] : terms) terms_.push_back({name, 0.0, p});
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const double m = std::abs(terms[k].second);
      scale = std::max(scale, m);
      if (m > terms_[k].max_abs) {
        terms_[k].max_abs = m;
        terms_[k].where = p;
      }
    }
    const double r = std::isfinite(std::abs(residual)) ? std::abs(residual) : HUGE_VAL;
    const double rel = scale > 0.0 ? r / scale : r;
    out_.max_abs = std::max(out_.max_abs, r);
    if (rel >= out_.max_relative) {
      out_.max_relative = rel;
      out_.worst = p;
    }
  }
  IdentityResidual result() {
    out_.terms = terms_;
    return out_;
  }

 private:
  IdentityResidual out_;
  std::vector<TermMagnitude> terms_;
};

void check_first_derivatives(const char* name, const std::function<cplx(const JetPoint&, int)>& eval,
                             const std::vector<SpaceTimePoint>& probes, int dim) {
  constexpr double h = 1e-5;
  for (const auto& p : probes) {
    const JetPoint J = jet_point(p);
    const cplx f0 = eval(J, -1);
    for (int v = 0; v < variable_count(dim); ++v) {
      const cplx d = eval(J, v);
      const cplx fp = eval(constant_point(shifted(p, v, h)), -1);
      const cplx fm = eval(constant_point(shifted(p, v, -h)), -1);
      const cplx fd = (fp - fm) / (2.0 * h);
      const double tol = 1e-5 * std::abs(d) + 1e-9 * std::max({std::abs(fp), std::abs(fm), std::abs(f0)}) / h + 1e-12;
      if (!(std::abs(d - fd) <= tol))
        throw std::invalid_argument(std::string("derivative of ") + name + " along variable " + std::to_string(v) +
                                    " disagrees with finite differences at " + describe(p));
    }
  }
}

std::function<cplx(const JetPoint&, int)> real_probe(const RealJetFn& f) {
  return [f](const JetPoint& J, int v) -> cplx {
    const RealJet r = f(J);
    if (v < 0) return r.value();
    return v == 0 ? r.derivative(1, 0, 0) : (v == 1 ? r.derivative(0, 1, 0) : r.derivative(0, 0, 1));
  };
}

std::function<cplx(const JetPoint&, int)> complex_probe(const ComplexJetFn& f) {
  return [f](const JetPoint& J, int v) -> cplx {
    const ComplexJet r = f(J);
    if (v < 0) return r.value();
    return v == 0 ? r.derivative(1, 0, 0) : (v == 1 ? r.derivative(0, 1, 0) : r.derivative(0, 0, 1));
  };
}

}  // namespace

std::vector<SpaceTimePoint> random_sample_points(const Domain& domain, double t_lo, double t_hi,
                                                 std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(derive_path_seed(seed, 0));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SpaceTimePoint> pts(count);
  for (auto& p : pts) {
    p.t = t_lo + (t_hi - t_lo) * u(rng);
    for (int a = 0; a < domain.dim; ++a) p.x[a] = domain.lower[a] + (domain.upper[a] - domain.lower[a]) * u(rng);
  }
  return pts;
}

MultiplierField MultiplierField::affine(const Domain& domain) {
  MultiplierField m;
  m.dim = domain.dim;
  for (int a = 0; a < domain.dim; ++a) {
    const double lo = domain.lower[a];
    const double L = domain.upper[a] - domain.lower[a];
    m.mu[a] = [a, lo, L](const JetPoint& J) { return (J[a + 1] - lo) * (2.0 / L) - 1.0; };
  }
  return m;
}

double MultiplierField::normal_mismatch(const Mesh& mesh) const {
  double worst = 0.0;
  for (const auto& b : mesh.boundary()) {
    const JetPoint J = constant_point({0.0, b.position});
    double dot = 0.0;
    for (int a = 0; a < dim; ++a) dot += mu[a](J).value() * b.normal[a];
    worst = std::max(worst, std::abs(dot - 1.0));
  }
  return worst;
}

ComplexJetFn manufactured_sine() {
  return [](const JetPoint& J) {
    ComplexJet time = ComplexJet(1.0) + ComplexJet(J[0]) * kI;
    return time * ComplexJet(sin(J[1] * std::numbers::pi));
  };
}

ComplexJetFn manufactured_field(int dim) {
  return [dim](const JetPoint& J) {
    const RealJet& t = J[0];
    ComplexJet time = ComplexJet(1.0 + t * 0.5) + ComplexJet(t * t * (-1.0) + t * t * t * 0.2) * kI;
    ComplexJet space = ComplexJet(sin(J[1] * std::numbers::pi)) + ComplexJet(cos(J[1] * 2.0)) * cplx{0.0, 0.3};
    if (dim == 2) space = space * (ComplexJet(cos(J[2] * (0.5 * std::numbers::pi))) + ComplexJet(J[2] * J[2]) * cplx{0.0, 0.25});
    return time * space;
  };
}

IdentityResidual multiplier_identity_residual(const MultiplierField& mu, const ComplexJetFn& z,
                                              const std::vector<SpaceTimePoint>& points, DerivativeMode mode,
                                              FdOptions fd) {
  const int n = mu.dim;
  auto zjet = [&](const SpaceTimePoint& p) {
    return mode == DerivativeMode::Analytic ? z(jet_point(p)) : fd_jet(z, p, n, fd.h);
  };
  struct Local {
    ComplexJet flux[2];
    ComplexJet phase;  // i (mu . grad conj z) z
    cplx lhs, mu_grad, div_mu_grad, div_mu_phase;
  };
  auto local = [&](const SpaceTimePoint& p) {
    const JetPoint J = jet_point(p);
    const ComplexJet Z = zjet(p);
    const ComplexJet Zb = conj(Z);
    std::array<RealJet, 2> m;
    for (int a = 0; a < n; ++a) m[a] = mu.mu[a](J);
    ComplexJet G, grad_sq, lap, lapb;
    RealJet div_mu;
    for (int a = 0; a < n; ++a) {
      const ComplexJet za = Z.diff(a + 1);
      G += ComplexJet(m[a]) * za;
      grad_sq += za * conj(za);
      lap += za.diff(a + 1);
      lapb += conj(za).diff(a + 1);
      div_mu += m[a].diff(a + 1);
    }
    const ComplexJet Gb = conj(G);
    const ComplexJet zt = Z.diff(0);
    const ComplexJet zbt = Zb.diff(0);
    Local L;
    L.lhs = (Gb * (zt * kI + lap) + G * (zbt * (-kI) + lapb)).value();
    for (int k = 0; k < n; ++k)
      L.flux[k] = Gb * Z.diff(k + 1) + G * Zb.diff(k + 1) - Z * zbt * ComplexJet(m[k]) * kI -
                  grad_sq * ComplexJet(m[k]);
    L.phase = Gb * Z * kI;
    cplx mg{};
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) mg += m[k].diff(j + 1).value() * Z.diff(j + 1).value() * Zb.diff(k + 1).value();
    L.mu_grad = -2.0 * mg;
    L.div_mu_grad = div_mu.value() * grad_sq.value();
    L.div_mu_phase = kI * div_mu.value() * (Z * zbt).value();
    return L;
  };

  ResidualAccumulator acc;
  for (const auto& p : points) {
    const Local c = local(p);
    cplx div_flux{}, dt_phase{};
    if (mode == DerivativeMode::Analytic) {
      for (int k = 0; k < n; ++k) div_flux += c.flux[k].derivative(0, k == 0 ? 1 : 0, k == 1 ? 1 : 0);
      dt_phase = c.phase.derivative(1, 0, 0);
    } else {
      for (int k = 0; k < n; ++k) {
        const cplx fp = local(shifted(p, k + 1, fd.h)).flux[k].value();
        const cplx fm = local(shifted(p, k + 1, -fd.h)).flux[k].value();
        div_flux += (fp - fm) / (2.0 * fd.h);
      }
      dt_phase = (local(shifted(p, 0, fd.h)).phase.value() - local(shifted(p, 0, -fd.h)).phase.value()) / (2.0 * fd.h);
    }
    const cplx rhs = div_flux + dt_phase + c.mu_grad + c.div_mu_grad + c.div_mu_phase;
    acc.point(p, c.lhs - rhs,
              {{"lhs", c.lhs},
               {"div_flux", div_flux},
               {"dt_phase", dt_phase},
               {"mu_grad", c.mu_grad},
               {"div_mu_grad", c.div_mu_grad},
               {"div_mu_phase", c.div_mu_phase}});
  }
  return acc.result();
}

GeneralIdentityInputs::GeneralIdentityInputs(int dim, RealJetFn beta, std::array<std::array<RealJetFn, 2>, 2> b,
                                             RealJetFn ell, RealJetFn Psi, ComplexJetFn z,
                                             const std::vector<SpaceTimePoint>& probes)
    : dim_(dim), beta_(std::move(beta)), b_(std::move(b)), ell_(std::move(ell)), Psi_(std::move(Psi)), z_(std::move(z)) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("dimension must be 1 or 2");
  if (!beta_ || !ell_ || !Psi_ || !z_) throw std::invalid_argument("identity inputs must all be supplied");
  for (int j = 0; j < dim; ++j)
    for (int k = 0; k < dim; ++k)
      if (!b_[j][k]) throw std::invalid_argument("b^{jk} must be supplied for every j, k");
  if (dim == 2) {
    for (const auto& p : probes) {
      const JetPoint J = jet_point(p);
      const RealJet b01 = b_[0][1](J);
      const RealJet b10 = b_[1][0](J);
      for (int k = 0; k < RealJet::kSize; ++k)
        if (b01.coeff(k) != b10.coeff(k))
          throw std::invalid_argument("b is not symmetric at " + describe(p));
    }
  }
  check_first_derivatives("beta", real_probe(beta_), probes, dim);
  for (int j = 0; j < dim; ++j)
    for (int k = 0; k < dim; ++k) check_first_derivatives("b", real_probe(b_[j][k]), probes, dim);
  check_first_derivatives("l", real_probe(ell_), probes, dim);
  check_first_derivatives("Psi", real_probe(Psi_), probes, dim);
  check_first_derivatives("z", complex_probe(z_), probes, dim);
}

GeneralIdentityInputs GeneralIdentityInputs::specialized(const WeightSetup& setup, ComplexJetFn z,
                                                         const std::vector<SpaceTimePoint>& probes) {
  const int dim = setup.dim();
  const double s = setup.s();
  const double lam = setup.lambda();
  const double T = setup.T();
  const double tau = setup.tau();
  const Point x0 = setup.x0();
  const double e5 = std::exp(5.0 * lam * setup.psi_max());
  auto ell = [=](const JetPoint& J) {
    RealJet psi(tau);
    for (int a = 0; a < dim; ++a) {
      const RealJet d = J[a + 1] - x0[a];
      psi += d * d;
    }
    const RealJet q = J[0] * (T - J[0]);
    return (exp(psi * (4.0 * lam)) - e5) * s * reciprocal(q * q);
  };
  auto Psi = [=](const JetPoint& J) {
    const RealJet l = ell(J);
    RealJet lap;
    for (int a = 0; a < dim; ++a) lap += l.diff(a + 1).diff(a + 1);
    return -lap;
  };
  auto one = [](const JetPoint&) { return RealJet(1.0); };
  auto zero = [](const JetPoint&) { return RealJet(0.0); };
  std::array<std::array<RealJetFn, 2>, 2> b{{{one, zero}, {zero, one}}};
  return GeneralIdentityInputs(dim, one, b, ell, Psi, std::move(z), probes);
}

GeneralIdentityInputs general_identity_example(int dim, const std::vector<SpaceTimePoint>& probes) {
  auto beta = [](const JetPoint& J) { return 1.0 + J[0] * J[1] * 0.2; };
  std::array<std::array<RealJetFn, 2>, 2> b;
  if (dim == 1) {
    b[0][0] = [](const JetPoint& J) { return 1.0 + J[1] * J[1] * 0.25; };
  } else {
    b[0][0] = [](const JetPoint&) { return RealJet(1.0); };
    b[1][1] = [](const JetPoint&) { return RealJet(2.0); };
    b[0][1] = b[1][0] = [](const JetPoint&) { return RealJet(0.0); };
  }
  auto ell = [](const JetPoint& J) {
    return (J[0] * (1.0 - J[0]) + 0.5) * (J[1] * J[1] + J[2] * 0.5) - J[0] * 0.3;
  };
  auto Psi = [](const JetPoint& J) { return cos(J[1] + J[2]) * 0.4 + J[0]; };
  return GeneralIdentityInputs(dim, beta, b, ell, Psi, manufactured_field(dim), probes);
}

namespace {

struct WeightedLocal {
  cplx theta_term{};  // theta (Pz conj(I1) + conj(Pz) I1)
  ComplexJet M;
  std::array<ComplexJet, 2> V;
  cplx I1_sq{}, c_grad{}, D_v{}, mixed_t{}, phase{};
  cplx D_parts[4]{};
  IdentityCoefficients coeffs;
};

WeightedLocal weighted_local(const GeneralIdentityInputs& in, const SpaceTimePoint& p, const ComplexJet& Z,
                             double ell_shift) {
  const int n = in.dim();
  const JetPoint J = jet_point(p);
  const RealJet beta = in.beta()(J);
  RealJet b[2][2];
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) b[j][k] = in.b(j, k)(J);
  const RealJet ell = in.ell()(J) - ell_shift;
  const RealJet Psi = in.Psi()(J);
  const RealJet theta = exp(ell);
  const ComplexJet v = ComplexJet(theta) * Z;
  const ComplexJet vb = conj(v);

  const RealJet lt = ell.diff(0);
  RealJet lj[2];
  ComplexJet vj[2], vbj[2];
  for (int j = 0; j < n; ++j) {
    lj[j] = ell.diff(j + 1);
    vj[j] = v.diff(j + 1);
    vbj[j] = vb.diff(j + 1);
  }
  const ComplexJet vt = v.diff(0);
  const ComplexJet vbt = vb.diff(0);
  const ComplexJet vsq = v * vb;

  ComplexJet Pz = ComplexJet(beta) * Z.diff(0) * kI;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) Pz += (ComplexJet(b[j][k]) * Z.diff(j + 1)).diff(k + 1);

  ComplexJet I1 = ComplexJet(beta * lt) * v * (-kI) + ComplexJet(Psi) * v;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) I1 -= ComplexJet(b[j][k] * lj[j]) * vj[k] * 2.0;

  RealJet A = -Psi;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) A += b[j][k] * lj[j] * lj[k] - (b[j][k] * lj[j]).diff(k + 1);

  WeightedLocal L;
  L.theta_term = (ComplexJet(theta) * (Pz * conj(I1) + conj(Pz) * I1)).value();

  L.M = ComplexJet(beta * beta * lt) * vsq;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) L.M += ComplexJet(beta * b[j][k] * lj[j]) * (vbj[k] * v - vj[k] * vb) * kI;

  for (int k = 0; k < n; ++k) {
    ComplexJet Vk;
    for (int j = 0; j < n; ++j) {
      Vk -= ComplexJet(beta) * (ComplexJet(b[j][k] * lj[j]) * (v * vbt - vb * vt) +
                                ComplexJet(b[j][k] * lt) * (vj[j] * vb - vbj[j] * v)) *
            kI;
      Vk -= ComplexJet(Psi * b[j][k]) * (vj[j] * vb + vbj[j] * v);
      Vk += ComplexJet(b[j][k] * (A * lj[j] * 2.0 + Psi.diff(j + 1))) * vsq;
      for (int jp = 0; jp < n; ++jp)
        for (int kp = 0; kp < n; ++kp)
          Vk += ComplexJet((b[j][kp] * b[jp][k] * 2.0 - b[j][k] * b[jp][kp]) * lj[j]) *
                (vj[jp] * vbj[kp] + vbj[jp] * vj[kp]);
    }
    L.V[k] = Vk;
  }

  Mat2 c{};
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      RealJet cjk = -(b[j][k] * Psi);
      for (int jp = 0; jp < n; ++jp)
        for (int kp = 0; kp < n; ++kp)
          cjk += (b[jp][k] * lj[jp]).diff(kp + 1) * b[j][kp] * 2.0 - (b[j][k] * b[jp][kp] * lj[jp]).diff(kp + 1);
      c[j][k] = cjk.value();
    }

  const double D_ltt = (beta * beta * lt).diff(0).value();
  double D_Psi = 0.0, D_lA = 0.0;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      D_Psi += (b[j][k] * Psi.diff(k + 1)).diff(j + 1).value();
      D_lA += 2.0 * (b[j][k] * lj[j] * A).diff(k + 1).value();
    }
  const double D_APsi = 2.0 * (A * Psi).value();
  const double D = D_ltt + D_Psi + D_lA + D_APsi;

  // Summed before adding beta Psi so that Psi = -Lap l cancels exactly.
  double phase_coeff = 0.0;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) phase_coeff += (beta * b[j][k] * lj[j]).diff(k + 1).value();
  phase_coeff += (beta * Psi).value();

  L.I1_sq = 2.0 * std::norm(I1.value());
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      L.c_grad += c[j][k] * (vj[k].value() * vbj[j].value() + vbj[k].value() * vj[j].value());
      const double mix = (beta * b[j][k] * lj[j]).diff(0).value() + (b[j][k] * (beta * lt).diff(j + 1)).value();
      L.mixed_t += kI * mix * (vbj[k].value() * v.value() - vj[k].value() * vb.value());
    }
  const double vsq0 = vsq.value().real();
  L.D_v = D * vsq0;
  L.D_parts[0] = D_ltt * vsq0;
  L.D_parts[1] = D_Psi * vsq0;
  L.D_parts[2] = D_lA * vsq0;
  L.D_parts[3] = D_APsi * vsq0;
  L.phase = kI * phase_coeff * (vb.value() * vt.value() - v.value() * vbt.value());
  L.coeffs = {A.value(), D, c, phase_coeff};
  return L;
}

}  // namespace

IdentityCoefficients identity_coefficients(const GeneralIdentityInputs& inputs, const SpaceTimePoint& p) {
  const double shift = inputs.ell()(constant_point(p)).value();
  return weighted_local(inputs, p, inputs.z()(jet_point(p)), shift).coeffs;
}

IdentityResidual carleman_identity_residual(const GeneralIdentityInputs& inputs,
                                            const std::vector<SpaceTimePoint>& points, DerivativeMode mode,
                                            FdOptions fd) {
  const int n = inputs.dim();
  auto zjet = [&](const SpaceTimePoint& p) {
    return mode == DerivativeMode::Analytic ? inputs.z()(jet_point(p)) : fd_jet(inputs.z(), p, n, fd.h);
  };
  ResidualAccumulator acc;
  for (const auto& p : points) {
    // theta is normalised to 1 at p; the identity is invariant under l -> l + const.
    const double shift = inputs.ell()(constant_point(p)).value();
    const WeightedLocal c = weighted_local(inputs, p, zjet(p), shift);
    cplx dM{}, divV{};
    if (mode == DerivativeMode::Analytic) {
      dM = c.M.derivative(1, 0, 0);
      for (int k = 0; k < n; ++k) divV += c.V[k].derivative(0, k == 0 ? 1 : 0, k == 1 ? 1 : 0);
    } else {
      auto at = [&](int var, double h) {
        const SpaceTimePoint q = shifted(p, var, h);
        return weighted_local(inputs, q, zjet(q), shift);
      };
      dM = (at(0, fd.h).M.value() - at(0, -fd.h).M.value()) / (2.0 * fd.h);
      for (int k = 0; k < n; ++k)
        divV += (at(k + 1, fd.h).V[k].value() - at(k + 1, -fd.h).V[k].value()) / (2.0 * fd.h);
    }
    const cplx lhs = c.theta_term + dM + divV;
    const cplx rhs = c.I1_sq + c.c_grad + c.D_v + c.mixed_t + c.phase;
    acc.point(p, lhs - rhs,
              {{"theta_Pz_I1", c.theta_term},
               {"dM", dM},
               {"divV", divV},
               {"2|I1|^2", c.I1_sq},
               {"c_grad", c.c_grad},
               {"D|v|^2", c.D_v},
               {"D_ltt", c.D_parts[0]},
               {"D_Psi", c.D_parts[1]},
               {"D_lA", c.D_parts[2]},
               {"D_APsi", c.D_parts[3]},
               {"mixed_t", c.mixed_t},
               {"phase", c.phase}});
  }
  return acc.result();
}

std::vector<double> integrated_M_check(const ForwardModel& model, const WeightSetup& setup,
                                       const Trajectory& trajectory, const std::vector<double>& margins) {
  const Mesh& mesh = model.mesh();
  const int N = trajectory.steps();
  const double dt = trajectory.dt;
  const double vol = mesh.cell_volume();
  setup.check_cap(dt);
  std::vector<double> m_int(static_cast<std::size_t>(N + 1), 0.0);
  std::vector<double> m_abs(static_cast<std::size_t>(N + 1), 0.0);
  std::array<ComplexGridField, 2> grad;
  for (int k = 1; k < N; ++k) {
    const double t = k * dt;
    const ComplexGridField& y = trajectory.states[static_cast<std::size_t>(k)];
    for (int a = 0; a < mesh.dim(); ++a) model.gradient(y, a, grad[a]);
    double sum = 0.0, sum_abs = 0.0;
    for (std::size_t i = 0; i < mesh.interior_count(); ++i) {
      const auto e = static_cast<Eigen::Index>(i);
      const CarlemanWeights w = eval_weights(setup, t, mesh.interior_position(i));
      const double ysq = std::norm(y[e]);
      double val = theta2_times(w.ell, w.ell_t * ysq);
      double mag = std::abs(val);
      for (int a = 0; a < mesh.dim(); ++a) {
        const cplx prod = std::conj(grad[a][e]) * y[e];
        const double term = theta2_times(w.ell, -2.0 * w.grad_ell[a] * prod.imag());
        val += term;
        mag += theta2_times(w.ell, 2.0 * std::abs(w.grad_ell[a]) * std::abs(prod));
      }
      sum += val;
      sum_abs += mag;
    }
    m_int[static_cast<std::size_t>(k)] = sum * vol;
    m_abs[static_cast<std::size_t>(k)] = sum_abs * vol;
  }
  const double peak = *std::max_element(m_abs.begin(), m_abs.end());
  std::vector<double> out;
  for (double delta : margins) {
    const int lo = std::clamp(static_cast<int>(std::lround(delta / dt)), 1, N / 2);
    const int hi = N - lo;
    const double diff = std::abs(m_int[static_cast<std::size_t>(hi)] - m_int[static_cast<std::size_t>(lo)]);
    out.push_back(peak > 0.0 ? diff / peak : 0.0);
  }
  return out;
}

MCheckResult integrated_M_check(const ForwardModel& model, const CarlemanParams& params, const ComplexGridField& y0,
                                std::uint64_t base_seed, std::size_t paths, const MCheckOptions& options,
                                unsigned threads) {
  const WeightSetup setup(params, model.mesh().domain());
  MCheckResult res;
  res.margins = options.margins;
  if (res.margins.empty()) res.margins = {model.dt()};
  std::vector<std::vector<double>> per_path(paths);
  parallel_for(paths, threads, [&](std::size_t k) {
    const BrownianPath path(base_seed, k, model.T(), model.steps());
    const Trajectory traj = simulate_forward(model, y0, path);
    per_path[k] = integrated_M_check(model, setup, traj, res.margins);
  });
  res.normalized.assign(res.margins.size(), 0.0);
  for (const auto& v : per_path)
    for (std::size_t m = 0; m < v.size(); ++m) res.normalized[m] = std::max(res.normalized[m], v[m]);
  return res;
}

}  // namespace sselab
