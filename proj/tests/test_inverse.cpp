#include <gtest/gtest.h>

#include <cmath>

#include "sselab/inverse.hpp"

using namespace sselab;

namespace {

Domain unit_interval() { return Domain{}; }

Coefficients noisy(bool sources) {
  CoefficientSpec s;
  s.b1 = ProfileSpec::parse("bump:0.3");
  s.a2 = ProfileSpec::parse("const:0.2:0.1");
  s.a3 = ProfileSpec::parse("const:0.5");
  if (sources) {
    s.f = ProfileSpec::parse("bump:0.5");
    s.g = ProfileSpec::parse("const:0.3");
  }
  return s.build(unit_interval());
}

NonlinearityPair pair(const std::string& a, const std::string& b) {
  NonlinearityPair p;
  p.F1 = NonlinearityProfile::parse(a);
  p.F2 = NonlinearityProfile::parse(b);
  return p;
}

}  // namespace

TEST(Nonlinearity, Profiles) {
  const auto sat = NonlinearityProfile::parse("sat:2");
  EXPECT_DOUBLE_EQ(sat.eval(1.0), 1.0);
  EXPECT_EQ(sat.eval(0.0), 0.0);
  EXPECT_EQ(sat.lipschitz(), 2.0);
  EXPECT_EQ(NonlinearityProfile::parse("linear:-0.5").eval(2.0), -1.0);
  EXPECT_EQ(NonlinearityProfile::parse("linear:-0.5").lipschitz(), 0.5);
  EXPECT_TRUE(NonlinearityProfile::parse("zero").is_zero());
  EXPECT_EQ(NonlinearityProfile::parse(sat.to_string()).c, 2.0);
  EXPECT_THROW(NonlinearityProfile::parse("cubic:1"), std::invalid_argument);
  EXPECT_THROW(NonlinearityProfile::parse("sat"), std::invalid_argument);
  EXPECT_THROW(NonlinearityProfile::parse("zero:1"), std::invalid_argument);
  EXPECT_LE(pair("sat:1", "linear:3").lipschitz_spot_check(500, 1), 1.0 + 1e-12);
  EXPECT_EQ(pair("sat:1", "linear:3").lipschitz(), 3.0);
}

TEST(Semilinear, ZeroPairIsBitIdenticalToLinearSolver) {
  const Mesh m = build_mesh(unit_interval(), 16);
  const ForwardModel model(m, noisy(true), 1.0, 64);
  const ComplexGridField z0 = initial_ensemble(m, 3, 1, 2)[0];
  const BrownianPath path(5, 1, 1.0, 64);
  const auto a = solve_semilinear(model, {}, z0, path);
  const auto b = simulate_forward(model, z0, path);
  ASSERT_EQ(a.states.size(), b.states.size());
  for (std::size_t n = 0; n < a.states.size(); ++n) EXPECT_TRUE(a.states[n] == b.states[n]);
}

TEST(Semilinear, ZeroStaysZero) {
  const Mesh m = build_mesh(unit_interval(), 16);
  const ForwardModel model(m, noisy(false), 1.0, 64);
  for (const auto& nl : {pair("sat:1", "sat:1"), pair("linear:2", "linear:-1")}) {
    const auto tr = solve_semilinear(model, nl, ComplexGridField::Zero(15), BrownianPath(5, 1, 1.0, 64));
    for (const auto& y : tr.states) EXPECT_EQ(y.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Semilinear, NonlinearityChangesTheSolution) {
  const Mesh m = build_mesh(unit_interval(), 16);
  const ForwardModel model(m, noisy(false), 1.0, 64);
  const ComplexGridField z0 = initial_ensemble(m, 3, 1, 2)[0];
  const BrownianPath path(5, 1, 1.0, 64);
  const auto a = solve_semilinear(model, pair("sat:1", "sat:1"), z0, path);
  const auto b = solve_semilinear(model, {}, z0, path);
  EXPECT_GT((a.states.back() - b.states.back()).norm(), 1e-6);
  EXPECT_TRUE(a.states.back().allFinite());
}

TEST(ObservationMap, ZeroDatumAndLinearity) {
  const Mesh m = build_mesh(unit_interval(), 16);
  const ForwardModel model(m, noisy(false), 1.0, 64);
  const TraceOperator op(m, TraceSelection::Gamma0);
  const BrownianPath path(5, 2, 1.0, 64);
  EXPECT_EQ(observation_map(model, {}, ComplexGridField::Zero(15), path, op).values.norm(), 0.0);
  const auto ens = initial_ensemble(m, 4, 2, 8);
  const cplx a{0.7, -0.2}, b{-1.3, 0.4};
  const auto lhs = observation_map(model, {}, a * ens[0] + b * ens[1], path, op);
  const auto r0 = observation_map(model, {}, ens[0], path, op);
  const auto r1 = observation_map(model, {}, ens[1], path, op);
  const Eigen::MatrixXcd rhs = a * r0.values + b * r1.values;
  EXPECT_LE((lhs.values - rhs).norm(), 1e-12 * rhs.norm());
}

TEST(ObservationMap, TraceSelfConvergesUnderRefinement) {
  // deterministic flow: errors against a fine reference shrink as the mesh refines
  std::vector<Eigen::VectorXcd> finals;
  for (int n : {16, 32, 64}) {
    const Mesh m = build_mesh(unit_interval(), n);
    CoefficientSpec s;
    s.b1 = ProfileSpec::parse("bump:0.3");
    const ForwardModel det(m, s.build(unit_interval()), 1.0, 256);
    const auto tr = observation_map(det, {}, dirichlet_mode(m, {1, 1}) + dirichlet_mode(m, {2, 1}),
                                    BrownianPath::zero(1.0, 256), TraceOperator(m, TraceSelection::Gamma0));
    finals.push_back(tr.values.col(0));
  }
  const double e1 = (finals[0] - finals[2]).norm(), e2 = (finals[1] - finals[2]).norm();
  EXPECT_LT(e2, e1);
}

TEST(Stability, IdenticalPairIsTrivial) {
  const Mesh m = build_mesh(unit_interval(), 16);
  const ForwardModel model(m, noisy(true), 1.0, 32);
  const ComplexGridField z0 = initial_ensemble(m, 3, 1, 2)[0];
  McOptions mc;
  mc.paths = 8;
  const auto rep = stability_scan(model, {}, {{z0, z0}}, mc);
  ASSERT_EQ(rep.lines.size(), 1u);
  EXPECT_TRUE(rep.lines[0].trivial);
  EXPECT_EQ(rep.lines[0].ratio, 0.0);
  EXPECT_TRUE(rep.linear_reduction);
}

TEST(Stability, SaturatedWithinThreeTimesLinear) {
  const Mesh m = build_mesh(unit_interval(), 32);
  const ForwardModel model(m, noisy(true), 1.0, 128);
  const auto pairs = stability_pairs(m, 4, 4, 5);
  McOptions mc;
  mc.paths = 40;
  const auto lin = stability_scan(model, {}, pairs, mc);
  const auto sat = stability_scan(model, pair("sat:1", "sat:1"), pairs, mc);
  EXPECT_FALSE(sat.linear_reduction);
  EXPECT_TRUE(std::isfinite(sat.max_ratio));
  EXPECT_GT(lin.max_ratio, 0.0);
  EXPECT_LE(sat.max_ratio, 3 * lin.max_ratio);
  EXPECT_GE(sat.max_ratio, lin.max_ratio / 3);
}

TEST(Stability, PairsDifferInOneMode) {
  const Mesh m = build_mesh(unit_interval(), 16);
  const auto pairs = stability_pairs(m, 3, 6, 1);
  ASSERT_EQ(pairs.size(), 6u);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const ComplexGridField d = pairs[p].z0_hat - pairs[p].z0;
    const ComplexGridField mode = dirichlet_mode(m, lowest_modes(m, 3)[p % 3]);
    const cplx w = mode.dot(d) / mode.squaredNorm();
    EXPECT_LE((d - w * mode).norm(), 1e-12 * d.norm());
  }
}

TEST(Reconstruction, ZeroDataGivesZero) {
  const Mesh m = build_mesh(unit_interval(), 16);
  const ForwardModel model(m, noisy(false), 1.0, 64);
  const TraceOperator op(m, TraceSelection::Gamma0);
  const auto rec = record_observation(model, {}, ComplexGridField::Zero(15), BrownianPath(3, 0, 1.0, 64), op);
  const auto res = reconstruct(model, op, rec, {});
  EXPECT_EQ(res.z0.norm(), 0.0);
  EXPECT_TRUE(res.converged);
}

TEST(Reconstruction, NeedsStoredPath) {
  const Mesh m = build_mesh(unit_interval(), 16);
  const ForwardModel model(m, noisy(false), 1.0, 64);
  const TraceOperator op(m, TraceSelection::Gamma0);
  auto rec = record_observation(model, {}, initial_ensemble(m, 2, 1, 1)[0], BrownianPath(3, 0, 1.0, 64), op, false);
  EXPECT_FALSE(rec.path.has_value());
  EXPECT_THROW(reconstruct(model, op, rec, {}), std::invalid_argument);
}

TEST(Reconstruction, TikhonovObjectiveBehaviour) {
  const Mesh m = build_mesh(unit_interval(), 24);
  const ForwardModel model(m, noisy(true), 1.0, 96);
  const TraceOperator op(m, TraceSelection::Gamma0);
  const BrownianPath path(3, 4, 1.0, 96);
  const ComplexGridField truth = initial_ensemble(m, 4, 1, 6)[0];
  const auto rec = record_observation(model, {}, truth, path, op);
  const TraceMap A(model, path, op);
  // the affine offset carries the sources; the shifted data is linear in z0
  EXPECT_GT(A.offset().energy(), 0.0);
  const TikhonovObjective J(A, rec.trace, 1e-6);
  EXPECT_LE((J.shifted_data().values - A.apply(truth).values).norm(), 1e-12 * A.apply(truth).values.norm());
  const auto at_truth = J.value(truth);
  EXPECT_LE(at_truth.misfit, 1e-24);
  EXPECT_NEAR(at_truth.penalty, 0.5e-6 * A.l2_inner(truth, truth).real(), 1e-20);
  // larger alpha: smaller reconstruction norm and value curve monotone along history
  double prev_norm = INFINITY;
  for (double alpha : {1e-8, 1e-4, 1e-1}) {
    ReconstructionOptions opt;
    opt.alpha = alpha;
    const auto res = reconstruct(model, op, rec, opt);
    const double nrm = A.l2_inner(res.z0, res.z0).real();
    EXPECT_LT(nrm, prev_norm);
    prev_norm = nrm;
    for (std::size_t k = 1; k < res.history.size(); ++k)
      EXPECT_LE(res.history[k].J, res.history[k - 1].J * (1 + 1e-12));
  }
}
