#include <gtest/gtest.h>

#include <cmath>

#include "sselab/weights.hpp"

using namespace sselab;

namespace {

Domain interval(double lo, double hi, double x0) {
  Domain d;
  d.lower = {lo, 0.0};
  d.upper = {hi, 0.0};
  d.x0 = {x0, 0.0};
  return d;
}

Domain small_square() {
  Domain d;
  d.dim = 2;
  d.upper = {0.1, 0.1};
  d.x0 = {-0.05, -0.05};
  return d;
}

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace

TEST(Weights, SelectTauExamples) {
  EXPECT_DOUBLE_EQ(select_tau(interval(0, 1, -1)), 14.0);
  EXPECT_DOUBLE_EQ(select_tau(interval(0, 1, -10)), 5.0);
  EXPECT_DOUBLE_EQ(select_tau(interval(0, 0.1, -10), 1e-9), 1e-9);  // 6m >= 5M already
  CarlemanParams p;
  EXPECT_TRUE(WeightSetup(p, interval(0, 1, -1)).tau_admissible());
}

TEST(Weights, PsiDerivatives) {
  CarlemanParams p;
  const WeightSetup ws(p, small_square());
  const auto w = eval_weights(ws, 0.3, {0.05, 0.02});
  EXPECT_DOUBLE_EQ(w.grad_psi[0], 2 * 0.1);
  EXPECT_DOUBLE_EQ(w.grad_psi[1], 2 * 0.07);
  EXPECT_EQ(w.hess_psi[0][0], 2.0);
  EXPECT_EQ(w.hess_psi[1][1], 2.0);
  EXPECT_EQ(w.hess_psi[0][1], 0.0);
  const auto u = eval_weights(WeightSetup(p, interval(0, 1, -1)), 0.5, {0.0, 0.0});
  EXPECT_DOUBLE_EQ(u.grad_psi[0], 2.0);
}

TEST(Weights, SingularAtEndpoints) {
  CarlemanParams p;
  const WeightSetup ws(p, interval(0, 1, -1));
  EXPECT_THROW(eval_weights(ws, 0.0, {0.5, 0}), std::domain_error);
  EXPECT_THROW(eval_weights(ws, 1.0, {0.5, 0}), std::domain_error);
}

TEST(Weights, TimeSymmetry) {
  CarlemanParams p;
  p.s = 3;
  p.lambda = 2;
  const WeightSetup ws(p, small_square());
  for (double t : {0.1, 0.27, 0.4}) {
    const auto a = eval_weights(ws, t, {0.03, 0.07});
    const auto b = eval_weights(ws, 1.0 - t, {0.03, 0.07});
    EXPECT_NEAR(rel(a.ell, b.ell), 0.0, 1e-14);
    EXPECT_NEAR(rel(a.ell_t, -b.ell_t), 0.0, 1e-12);
  }
  EXPECT_NEAR(eval_weights(ws, 0.5, {0.03, 0.07}).ell_t, 0.0, 1e-12);
}

TEST(Weights, PointwiseInvariants) {
  for (double lam : {1.0, 2.0, 4.0}) {
    CarlemanParams p;
    p.s = 2;
    p.lambda = lam;
    const WeightSetup ws(p, small_square());
    for (double t : {0.05, 0.3, 0.5, 0.9})
      for (Point x : {Point{0.0, 0.0}, Point{0.04, 0.09}, Point{0.1, 0.1}}) {
        const auto w = eval_weights(ws, t, x);
        EXPECT_LT(w.log_theta, 0.0);
        EXPECT_GT(w.phi, 0.0);
        EXPECT_GE(w.A, 0.0);
        const double g2 = w.grad_ell[0] * w.grad_ell[0] + w.grad_ell[1] * w.grad_ell[1];
        EXPECT_LE(rel(w.A, g2), 1e-12);
        EXPECT_EQ(w.c[0][1], w.c[1][0]);
        EXPECT_LE(rel(w.D, assemble_D(w, 2)), 1e-12);
        EXPECT_NEAR(w.grad_ell[0], 4 * p.s * lam * w.phi * w.grad_psi[0], 1e-12 * std::abs(w.grad_ell[0]));
      }
  }
}

TEST(Weights, ThetaVanishesAtEndpoints) {
  CarlemanParams p;
  const WeightSetup ws(p, interval(0, 1, -1));
  EXPECT_LT(ws.ell(1e-3, {0.5, 0}), ws.ell(1e-2, {0.5, 0}));
  EXPECT_EQ(theta2_times(ws.ell(1e-3, {0.5, 0}), 1.0), 0.0);  // flushed below the smallest normal
}

// Central differences of the closed-form l converge at second order to the
// analytic derivatives.
TEST(Weights, AnalyticDerivativesMatchCentralDifferences) {
  CarlemanParams p;
  p.s = 1.5;
  p.lambda = 2;
  const WeightSetup ws(p, small_square());
  const double t = 0.37;
  const Point x{0.03, 0.06};
  const auto w = eval_weights(ws, t, x);
  auto err = [&](double h) {
    const double lt = (ws.ell(t + h, x) - ws.ell(t - h, x)) / (2 * h);
    const double ltt = (ws.ell(t + h, x) - 2 * ws.ell(t, x) + ws.ell(t - h, x)) / (h * h);
    const double hx = h / 10;
    const double lx = (ws.ell(t, {x[0] + hx, x[1]}) - ws.ell(t, {x[0] - hx, x[1]})) / (2 * hx);
    double lap = 0.0;
    for (int a = 0; a < 2; ++a) {
      Point xp = x, xm = x;
      xp[a] += hx;
      xm[a] -= hx;
      lap += (ws.ell(t, xp) - 2 * ws.ell(t, x) + ws.ell(t, xm)) / (hx * hx);
    }
    return std::array<double, 4>{std::abs(lt - w.ell_t), std::abs(ltt - w.ell_tt), std::abs(lx - w.grad_ell[0]),
                                 std::abs(lap - w.lap_ell)};
  };
  const auto e1 = err(0.02);
  const auto e2 = err(0.01);
  for (int k = 0; k < 4; ++k) {
    const double ratio = e1[k] / e2[k];
    EXPECT_GT(ratio, 3.2) << "quantity " << k;
    EXPECT_LT(ratio, 4.8) << "quantity " << k;
  }
}

TEST(Weights, LtRatioIsSIndependent) {
  for (double s : {0.01, 1.0, 100.0}) {
    CarlemanParams p;
    p.s = s;
    p.lambda = 3;
    const WeightSetup ws(p, small_square());
    CarlemanParams q = p;
    q.s = 1.0;
    EXPECT_LE(rel(lt_ratio(ws, 0.2, {0.05, 0.05}), lt_ratio(WeightSetup(q, small_square()), 0.2, {0.05, 0.05})),
              1e-14);
  }
}

TEST(Weights, BoundsReportOnSmallDomain) {
  CarlemanParams p;
  const Mesh mesh = build_mesh(small_square(), 8);
  const auto rep = check_weight_bounds(p, mesh, interior_time_grid(1.0, 64));
  EXPECT_TRUE(rep.tau_admissible);
  EXPECT_FALSE(rep.lt_unbounded_in_lambda);
  ASSERT_EQ(rep.sup_lt_ratio.size(), 4u);
  for (double v : rep.sup_lt_ratio) EXPECT_LE(v, 2.0);
  EXPECT_GE(rep.min_c_quotient, 32.0 * (1 - 1e-9));
  ASSERT_TRUE(rep.lambda_threshold.has_value());
}

TEST(Weights, InadmissibleTauIsFlaggedNotThrown) {
  CarlemanParams p;
  p.tau = 0.5;  // far below the 5/6 constraint on (0,1) with x0 = -1 (needs 14)
  const Mesh mesh = build_mesh(interval(0, 1, -1), 8);
  WeightBoundsOptions opt;
  opt.lambdas = {0.05, 0.1, 0.2};
  opt.s_values = {1.0};
  const auto rep = check_weight_bounds(p, mesh, interior_time_grid(1.0, 16), opt);
  EXPECT_FALSE(rep.tau_admissible);
  EXPECT_TRUE(rep.lt_unbounded_in_lambda);
}

TEST(Weights, OverflowCap) {
  CarlemanParams p;
  p.lambda = 50;
  const WeightSetup ws(p, interval(0, 1, -1));
  EXPECT_THROW(ws.check_cap(0.01), std::domain_error);
  CarlemanParams q;
  EXPECT_NO_THROW(WeightSetup(q, small_square()).check_cap(0.01));
}

TEST(Weights, InteriorGridExcludesEndpoints) {
  const auto g = interior_time_grid(2.0, 8);
  ASSERT_EQ(g.size(), 7u);
  EXPECT_DOUBLE_EQ(g.front(), 0.25);
  EXPECT_DOUBLE_EQ(g.back(), 1.75);
}
