#include <benchmark/benchmark.h>

#include <srhapc/cvxcore.hpp>
#include <srhapc/fixed_sic.hpp>
#include <srhapc/oracles.hpp>
#include <srhapc/quadrature.hpp>
#include <srhapc/ratemodel.hpp>
#include <srhapc/scenario.hpp>

namespace {

using namespace srhapc;

void bm_quadrature_value(benchmark::State& state) {
  const ExpectedLogGrid grid(static_cast<int>(state.range(0)));
  double s = 1e-7;
  for (auto _ : state) {
    benchmark::DoNotOptimize(grid.value(1e-7, s, 1.0, 1e-8));
    s = s < 1e-6 ? s * 1.01 : 1e-7;  // wander to defeat value caching
  }
}
BENCHMARK(bm_quadrature_value)->Arg(64)->Arg(192);

void bm_quadrature_eval(benchmark::State& state) {
  const ExpectedLogGrid grid(static_cast<int>(state.range(0)));
  double s = 1e-7;
  for (auto _ : state) {
    benchmark::DoNotOptimize(grid.eval(1e-7, s, 1.0, 1e-8));
    s = s < 1e-6 ? s * 1.01 : 1e-7;
  }
}
BENCHMARK(bm_quadrature_eval)->Arg(64)->Arg(192);

void bm_perspective_hessian(benchmark::State& state) {
  double tau = 0.25, q = 0.125;
  double h_tt = 0.0, h_tq = 0.0, h_qq = 0.0;
  for (auto _ : state) {
    cvx::perspective::hessian(3.0, tau, q, h_tt, h_tq, h_qq);
    benchmark::DoNotOptimize(h_qq);
    tau = tau < 0.9 ? tau + 1e-6 : 0.25;
  }
}
BENCHMARK(bm_perspective_hessian);

void bm_solve_p3(benchmark::State& state) {
  const ScenarioConfig cfg = default_scenario(2);
  const ChannelGains gains = build_channel_gains(cfg);
  P3Anchor anchor;
  anchor.p_tr_anchor.assign(cfg.num_sus, 0.0);
  for (int i = 0; i < cfg.num_sus; ++i) {
    anchor.p_tr_anchor[i] = cfg.eh_efficiency * cfg.pt_power * gains.a[i];
  }
  for (auto _ : state) {
    cvx::SmoothConcaveProgram program = assemble_p3(cfg, gains, anchor);
    benchmark::DoNotOptimize(cvx::solve(program, cfg.solver.tol, cfg.solver.max_newton));
  }
}
BENCHMARK(bm_solve_p3)->Unit(benchmark::kMillisecond);

void bm_algorithm1(benchmark::State& state) {
  const ScenarioConfig cfg = default_scenario(static_cast<int>(state.range(0)));
  const ChannelGains gains = build_channel_gains(cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(algorithm1(cfg, gains));
  }
}
BENCHMARK(bm_algorithm1)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void bm_audit_solution(benchmark::State& state) {
  const ScenarioConfig cfg = default_scenario(2);
  const ChannelGains gains = build_channel_gains(cfg);
  const FixedSicSolution sol = algorithm1(cfg, gains);
  const SicOrdering ordering = SicOrdering::all_pt_first(cfg.num_sus);
  for (auto _ : state) {
    benchmark::DoNotOptimize(audit_solution(sol.vars, ordering, cfg, gains));
  }
}
BENCHMARK(bm_audit_solution)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
