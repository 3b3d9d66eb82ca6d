#include <benchmark/benchmark.h>

#include "sselab/identities.hpp"
#include "sselab/inverse.hpp"

using namespace sselab;

namespace {

Domain interval() { return Domain{}; }

Coefficients noisy(bool sources) {
  CoefficientSpec s;
  s.b1 = ProfileSpec::parse("bump:0.3");
  s.a2 = ProfileSpec::parse("const:0.2:0.1");
  s.a3 = ProfileSpec::parse("const:0.5");
  if (sources) {
    s.f = ProfileSpec::parse("bump:0.5");
    s.g = ProfileSpec::parse("const:0.3");
  }
  return s.build(interval());
}

// one path of the noisy forward scheme; arg = interior resolution, steps = 4n
void BM_SimulateForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Mesh m = build_mesh(interval(), n);
  const ForwardModel model(m, noisy(true), 1.0, 4 * n);
  const ComplexGridField y0 = initial_ensemble(m, 4, 1, 1)[0];
  const BrownianPath path(1, 0, 1.0, 4 * n);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_forward(model, y0, path));
  state.SetItemsProcessed(state.iterations() * 4 * n);
}
BENCHMARK(BM_SimulateForward)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

// pointwise identity residual at arg sample points, jets carried to second order
void BM_IdentityResidual(benchmark::State& state) {
  Domain d;
  d.dim = 2;
  d.upper = {1.0, 1.0};
  d.x0 = {-1.0, -1.0};
  const auto pts = random_sample_points(d, 0.1, 0.9, static_cast<std::size_t>(state.range(0)), 4);
  const auto in = general_identity_example(2, {pts[0]});
  for (auto _ : state) benchmark::DoNotOptimize(carleman_identity_residual(in, pts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IdentityResidual)->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);

// full Tikhonov reconstruction from a Gamma0 trace on one stored path
void BM_Reconstruct(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Mesh m = build_mesh(interval(), n);
  const ForwardModel model(m, noisy(true), 1.0, 4 * n);
  const TraceOperator op(m, TraceSelection::Gamma0);
  const auto rec = record_observation(model, {}, initial_ensemble(m, 4, 1, 6)[0], BrownianPath(3, 4, 1.0, 4 * n), op);
  for (auto _ : state) benchmark::DoNotOptimize(reconstruct(model, op, rec, {}));
}
BENCHMARK(BM_Reconstruct)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
