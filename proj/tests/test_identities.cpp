#include <gtest/gtest.h>

#include <cmath>

#include "sselab/identities.hpp"

using namespace sselab;

namespace {

Domain small_box(int dim) {
  Domain d;
  d.dim = dim;
  d.upper = {0.1, dim == 2 ? 0.1 : 0.0};
  d.x0 = {-0.05, dim == 2 ? -0.05 : 0.0};
  return d;
}

Domain unit_interval() { return Domain{}; }

ComplexJet zero_field(const JetPoint&) { return ComplexJet(cplx{0.0, 0.0}); }

std::array<std::array<RealJetFn, 2>, 2> b_1d(const GeneralIdentityInputs& in) {
  std::array<std::array<RealJetFn, 2>, 2> b;
  b[0][0] = in.b(0, 0);
  return b;
}

}  // namespace

TEST(Identities, JetDerivatives) {
  const RealJet x = RealJet::variable(1, 0.3);
  const RealJet f = sin(x) * x;
  EXPECT_NEAR(f.derivative(0, 1), std::cos(0.3) * 0.3 + std::sin(0.3), 1e-15);
  EXPECT_NEAR(f.derivative(0, 2), -std::sin(0.3) * 0.3 + 2 * std::cos(0.3), 1e-15);
  EXPECT_NEAR(f.derivative(0, 4), std::sin(0.3) * 0.3 - 4 * std::cos(0.3), 1e-14);
}

TEST(Identities, ZeroFieldGivesZeroResiduals) {
  const auto pts = random_sample_points(unit_interval(), 0.1, 0.9, 20, 1);
  const auto r = multiplier_identity_residual(MultiplierField::affine(unit_interval()), zero_field, pts);
  EXPECT_EQ(r.max_abs, 0.0);
  auto gen = general_identity_example(1, {pts[0]});
  const GeneralIdentityInputs in(1, gen.beta(), b_1d(gen), gen.ell(), gen.Psi(), ComplexJetFn(zero_field), {pts[0]});
  const auto c = carleman_identity_residual(in, pts);
  EXPECT_EQ(c.max_abs, 0.0);
  for (const auto& t : c.terms) EXPECT_EQ(t.max_abs, 0.0) << t.name;
}

TEST(Identities, AffineMultiplierHasUnitNormalComponent) {
  Domain sq;
  sq.dim = 2;
  sq.upper = {2.0, 1.0};
  sq.x0 = {-1.0, -1.0};
  EXPECT_EQ(MultiplierField::affine(sq).normal_mismatch(build_mesh(sq, 8)), 0.0);
  EXPECT_EQ(MultiplierField::affine(unit_interval()).normal_mismatch(build_mesh(unit_interval(), 8)), 0.0);
}

TEST(Identities, SineFieldAnalyticAndFiniteDifference) {
  const auto pts = random_sample_points(unit_interval(), 0.1, 0.9, 100, 3);
  const auto mu = MultiplierField::affine(unit_interval());
  EXPECT_LE(multiplier_identity_residual(mu, manufactured_sine(), pts).max_relative, 1e-10);
  const auto a = multiplier_identity_residual(mu, manufactured_sine(), pts, DerivativeMode::FiniteDifference, {0.02});
  const auto b = multiplier_identity_residual(mu, manufactured_sine(), pts, DerivativeMode::FiniteDifference, {0.01});
  EXPECT_GT(a.max_abs, 0.0);
  EXPECT_NEAR(a.max_abs / b.max_abs, 4.0, 0.8);
}

TEST(Identities, RejectsNonSymmetricB) {
  const auto pts = random_sample_points(small_box(2), 0.1, 0.9, 4, 1);
  auto gen = general_identity_example(2, pts);
  std::array<std::array<RealJetFn, 2>, 2> b;
  b[0][0] = b[1][1] = [](const JetPoint&) { return RealJet(1.0); };
  b[0][1] = [](const JetPoint&) { return RealJet(0.5); };
  b[1][0] = [](const JetPoint&) { return RealJet(-0.5); };
  EXPECT_THROW(GeneralIdentityInputs(2, gen.beta(), b, gen.ell(), gen.Psi(), gen.z(), pts), std::invalid_argument);
}

TEST(Identities, RejectsCallbacksWithInconsistentDerivatives) {
  const auto pts = random_sample_points(unit_interval(), 0.1, 0.9, 4, 1);
  auto gen = general_identity_example(1, pts);
  // value-only jet: derivatives silently zero
  RealJetFn bad = [](const JetPoint& J) { return RealJet(std::sin(J[1].value())); };
  EXPECT_THROW(GeneralIdentityInputs(1, gen.beta(), b_1d(gen), bad, gen.Psi(), gen.z(), pts),
               std::invalid_argument);
}

TEST(Identities, SpecializedCoefficientsMatchWeights) {
  for (int dim : {1, 2}) {
    CarlemanParams p;
    p.s = 2;
    p.lambda = 1.5;
    const WeightSetup ws(p, small_box(dim));
    const auto pts = random_sample_points(small_box(dim), 0.2, 0.8, 10, 9);
    const auto in = GeneralIdentityInputs::specialized(ws, manufactured_field(dim), {pts[0]});
    for (const auto& pt : pts) {
      const auto c = identity_coefficients(in, pt);
      const auto w = eval_weights(ws, pt.t, pt.x);
      EXPECT_NEAR(c.A, w.A, 1e-12 * std::abs(w.A));
      EXPECT_NEAR(c.D, w.D, 1e-10 * std::abs(w.D));
      for (int j = 0; j < dim; ++j)
        for (int k = 0; k < dim; ++k) EXPECT_NEAR(c.c[j][k], w.c[j][k], 1e-12 * std::abs(w.c[0][0]));
      // Psi = -Lap l removes the phase term
      EXPECT_NEAR(c.phase_coefficient, 0.0, 1e-12 * std::abs(w.lap_ell));
    }
  }
}

TEST(Identities, GeneralExampleBothDimensions) {
  for (int dim : {1, 2}) {
    Domain d;
    d.dim = dim;
    d.upper = {1.0, 1.0};
    d.x0 = {-1.0, -1.0};
    const auto pts = random_sample_points(d, 0.1, 0.9, 100, 4);
    const auto r = carleman_identity_residual(general_identity_example(dim, {pts[0]}), pts);
    EXPECT_LE(r.max_relative, 1e-9);
    EXPECT_FALSE(r.terms.empty());
  }
}

TEST(Identities, SamplePointsStayInRange) {
  const auto pts = random_sample_points(small_box(2), 0.1, 0.9, 200, 5);
  ASSERT_EQ(pts.size(), 200u);
  for (const auto& p : pts) {
    EXPECT_GE(p.t, 0.1);
    EXPECT_LE(p.t, 0.9);
    EXPECT_GE(p.x[0], 0.0);
    EXPECT_LE(p.x[1], 0.1);
  }
  EXPECT_EQ(random_sample_points(small_box(2), 0.1, 0.9, 5, 5)[3].t, pts[3].t);
}

TEST(Identities, IntegratedMCheckZeroTrajectory) {
  const Mesh mesh = build_mesh(small_box(1), 16);
  const ForwardModel model(mesh, Coefficients{}, 1.0, 64);
  CarlemanParams p;
  MCheckOptions opt;
  opt.margins = {0.2, model.dt() / 2};
  const auto r = integrated_M_check(model, p, ComplexGridField::Zero(15), 1, 2, opt);
  for (double v : r.normalized) EXPECT_EQ(v, 0.0);
}
