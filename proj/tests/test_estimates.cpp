#include <gtest/gtest.h>

#include <cmath>

#include "sselab/estimates.hpp"

using namespace sselab;

namespace {

Domain unit_interval() { return Domain{}; }

Domain small_interval() {
  Domain d;
  d.upper = {0.1, 0.0};
  d.x0 = {-0.05, 0.0};
  return d;
}

Coefficients noisy(const Domain& d, bool sources, bool g_real = false) {
  CoefficientSpec s;
  s.b1 = ProfileSpec::parse("bump:0.3");
  s.a2 = ProfileSpec::parse("const:0.2");
  s.a3 = ProfileSpec::parse("const:0.5");
  if (sources) {
    s.f = ProfileSpec::parse("bump:0.5");
    s.g = ProfileSpec::parse(g_real ? "const:0.3" : "const:0.3:0.2");
    s.g_real = g_real;
  }
  return s.build(d);
}

McOptions mc(std::size_t paths, std::uint64_t seed = 3) {
  McOptions m;
  m.paths = paths;
  m.base_seed = seed;
  return m;
}

}  // namespace

TEST(Estimates, NoiseFreeModelsUseOneDeterministicPath) {
  const Mesh m = build_mesh(unit_interval(), 16);
  const ForwardModel model(m, Coefficients{}, 1.0, 32);
  EXPECT_TRUE(noise_free(model));
  int calls = 0;
  const auto r = run_paths(model, mc(50), 1, [&](const BrownianPath&) {
    ++calls;
    return std::vector<double>{1.5};
  });
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(r[0].mean, 1.5);
  EXPECT_EQ(r[0].se, 0.0);
  EXPECT_FALSE(noise_free(ForwardModel(m, noisy(unit_interval(), false), 1.0, 32)));
}

TEST(Estimates, ZeroDataGivesTrivialReports) {
  const Mesh m = build_mesh(unit_interval(), 16);
  const ForwardModel model(m, noisy(unit_interval(), false), 1.0, 32);
  const ComplexGridField zero = ComplexGridField::Zero(15);
  const auto obs = observability_quotient(model, {zero}, mc(8));
  ASSERT_EQ(obs.members.size(), 1u);
  EXPECT_TRUE(obs.members[0].trivial);
  EXPECT_FALSE(obs.members[0].ucp_violation);
  EXPECT_EQ(hidden_regularity_quotient(model, zero, mc(8)).quotient, 0.0);
  EXPECT_TRUE(energy_check(model, zero, mc(8)).vacuous);
  EXPECT_EQ(ucp_scan(model, {zero}, mc(8), TraceOperator(m, TraceSelection::Gamma0)).energy[0].mean, 0.0);

  const Mesh sm = build_mesh(small_interval(), 16);
  const ForwardModel smodel(sm, noisy(small_interval(), false), 1.0, 32);
  CarlemanParams p;
  const auto sides = carleman_sides(smodel, zero, p, mc(8));
  EXPECT_EQ(sides.lhs.mean, 0.0);
  EXPECT_EQ(sides.rhs_f.mean, 0.0);
  EXPECT_EQ(sides.rhs_g.mean, 0.0);
  EXPECT_EQ(sides.rhs_bdy.mean, 0.0);
  EXPECT_FALSE(sides.ratio.has_value());
}

TEST(Estimates, FreeFlowEnergyRatioIsOne) {
  const Mesh m = build_mesh(unit_interval(), 32);
  const ForwardModel model(m, Coefficients{}, 1.0, 64);
  const auto rep = energy_check(model, initial_ensemble(m, 3, 1, 1)[0], mc(4));
  EXPECT_NEAR(rep.worst_ratio, 1.0, 1e-12);
}

TEST(Estimates, NoisyEnergyRatioBoundedByItoGrowth) {
  CoefficientSpec s;
  s.a3 = ProfileSpec::parse("const:0.5");
  const Mesh m = build_mesh(unit_interval(), 32);
  const ForwardModel model(m, s.build(unit_interval()), 1.0, 128);
  const auto rep = energy_check(model, dirichlet_mode(m, {1, 1}), mc(400));
  EXPECT_LE(rep.worst_ratio, std::exp(0.25) * 1.05);
  EXPECT_GT(rep.worst_ratio, 1.0);
}

TEST(Estimates, FirstEigenmodeHasPositiveTraceEnergy) {
  const Mesh m = build_mesh(unit_interval(), 32);
  const ForwardModel model(m, Coefficients{}, 1.0, 64);
  const auto r = ucp_scan(model, {dirichlet_mode(m, {1, 1})}, mc(4), TraceOperator(m, TraceSelection::Gamma0));
  EXPECT_GT(r.min_energy, 0.0);
  // free flow: the trace of an eigenmode only rotates in phase
  const ComplexGridField e1 = dirichlet_mode(m, {1, 1});
  const double oracle = TraceOperator(m, TraceSelection::Gamma0).energy(e1) / norms(m, e1).h1_sq;
  EXPECT_NEAR(r.min_energy, oracle, 1e-10 * oracle);
  // continuum value 2 pi^2 / (1 + pi^2) for sin(pi x)
  EXPECT_NEAR(r.min_energy, 2 * M_PI * M_PI / (1 + M_PI * M_PI), 0.02);
}

TEST(Estimates, PhaseRotationAndScaling) {
  const Mesh m = build_mesh(unit_interval(), 16);
  const ForwardModel model(m, noisy(unit_interval(), false), 1.0, 64);
  const TraceOperator op(m, TraceSelection::Gamma0);
  const ComplexGridField y0 = initial_ensemble(m, 3, 1, 4)[0];
  const McEstimate base = boundary_trace_energy(model, y0, mc(16), op);
  const McEstimate rotated = boundary_trace_energy(model, std::polar(1.0, 0.7) * y0, mc(16), op);
  EXPECT_NEAR(rotated.mean, base.mean, 1e-12 * base.mean);
  // scaling by 2 is exact in binary floating point
  const McEstimate doubled = boundary_trace_energy(model, 2.0 * y0, mc(16), op);
  EXPECT_EQ(doubled.mean, 4.0 * base.mean);
}

TEST(Estimates, EnlargingObservationRegionNeverDecreases) {
  const Mesh m = build_mesh(small_interval(), 16);
  const ForwardModel model(m, noisy(small_interval(), false), 1.0, 64);
  const ComplexGridField y0 = initial_ensemble(m, 3, 1, 4)[0];
  CarlemanParams p;
  const auto g0 = carleman_sides(model, y0, p, mc(8), TraceSelection::Gamma0);
  const auto full = carleman_sides(model, y0, p, mc(8), TraceSelection::FullBoundary);
  EXPECT_GE(full.rhs_bdy.mean, g0.rhs_bdy.mean);
  EXPECT_EQ(full.lhs.mean, g0.lhs.mean);
}

TEST(Estimates, RealGDropsTheGradientTerm) {
  const Mesh m = build_mesh(small_interval(), 16);
  CarlemanParams p;
  const ComplexGridField y0 = initial_ensemble(m, 3, 1, 4)[0];
  const ForwardModel real_g(m, noisy(small_interval(), true, true), 1.0, 64);
  const auto r = carleman_sides(real_g, y0, p, mc(8));
  EXPECT_TRUE(r.g_real);
  EXPECT_EQ(r.rhs_g.mean, r.rhs_g_main.mean);
  const ForwardModel complex_g(m, noisy(small_interval(), true, false), 1.0, 64);
  const auto c = carleman_sides(complex_g, y0, p, mc(8));
  EXPECT_FALSE(c.g_real);
  EXPECT_DOUBLE_EQ(c.rhs_g.mean, c.rhs_g_main.mean + c.rhs_g_grad.mean);
}

TEST(Estimates, CarlemanFunctionalsFollowTheirSWeights) {
  // Same frozen trajectory, two values of s: only the weights change.
  const Mesh m = build_mesh(small_interval(), 16);
  const ForwardModel model(m, Coefficients{}, 1.0, 64);
  const TraceOperator op(m, TraceSelection::Gamma0);
  const auto tr = simulate_forward(model, initial_ensemble(m, 3, 1, 4)[0], BrownianPath::zero(1.0, 64));
  CarlemanParams a, b;
  a.s = 1.0;
  b.s = 2.0;
  const auto fa = carleman_functionals(model, WeightSetup(a, m.domain()), tr, op);
  const auto fb = carleman_functionals(model, WeightSetup(b, m.domain()), tr, op);
  EXPECT_GT(fa[0], 0.0);
  EXPECT_GT(fa[4], 0.0);
  EXPECT_NE(fa[0], fb[0]);
  EXPECT_EQ(fa[1], 0.0);  // no sources
}

TEST(Estimates, EnsembleIsMeshIndependentInWeights) {
  const auto w1 = ensemble_weights(4, 7, 2);
  const auto w2 = ensemble_weights(4, 7, 2);
  EXPECT_EQ(w1, w2);
  EXPECT_NE(ensemble_weights(4, 7, 3), w1);
  const Mesh a = build_mesh(unit_interval(), 16), b = build_mesh(unit_interval(), 32);
  const auto ea = initial_ensemble(a, 4, 3, 7), eb = initial_ensemble(b, 4, 3, 7);
  EXPECT_NEAR(norms(a, ea[2]).l2_sq, norms(b, eb[2]).l2_sq, 1e-12);
}

TEST(Estimates, HiddenRegularityFiniteWithNoise) {
  const Mesh m = build_mesh(unit_interval(), 32);
  const ComplexGridField y0 = dirichlet_mode(m, {1, 1});
  const auto clean = hidden_regularity_quotient(ForwardModel(m, Coefficients{}, 1.0, 64), y0, mc(4));
  CoefficientSpec s;
  s.a3 = ProfileSpec::parse("const:0.5");
  const auto noisy_q = hidden_regularity_quotient(ForwardModel(m, s.build(unit_interval()), 1.0, 64), y0, mc(100));
  EXPECT_GT(clean.quotient, 0.0);
  EXPECT_TRUE(std::isfinite(noisy_q.quotient));
  EXPECT_LE(noisy_q.quotient, 2.0 * clean.quotient);
}
