#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <srhapc/dynamic_sic.hpp>
#include <srhapc/fixed_sic.hpp>
#include <srhapc/oracles.hpp>
#include <srhapc/ratemodel.hpp>
#include <srhapc/scenario.hpp>

#include <cmath>
#include <vector>

using namespace srhapc;

namespace {

double rel(double got, double want) {
  return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

}  // namespace

TEST_CASE("traditional baseline") {
  SUBCASE("free resources saturate") {
    ScenarioConfig cfg = default_scenario(2);
    cfg.min_pt_gain = 0.0;
    cfg.bc_circuit_power = 0.0;
    const ChannelGains g = build_channel_gains(cfg);
    const BaselineSolution sol = traditional_sr_baseline(cfg, g);
    REQUIRE(sol.feasible);
    double tau_sum = 0.0;
    for (int i = 0; i < 2; ++i) {
      CHECK(sol.beta[i] >= 1.0 - 1e-5);
      tau_sum += sol.tau[i];
    }
    CHECK(std::abs(tau_sum - cfg.block_duration) < 1e-5);
  }
  SUBCASE("single-user optimum matches a 2-d brute force") {
    const ScenarioConfig cfg = default_scenario(1);
    const ChannelGains g = build_channel_gains(cfg);
    const BaselineSolution sol = traditional_sr_baseline(cfg, g);
    REQUIRE(sol.feasible);
    CHECK(rel(sol.rate, 1180.69956194) < 1e-5);  // regression pin

    const double W = cfg.bandwidth;
    const double P = cfg.pt_power;
    const double sigma2 = noise_power(cfg.noise_psd, cfg.bandwidth);
    const double a = g.a[0], d = g.d[0];
    const double T = cfg.block_duration;
    const double r0 = std::log2(1.0 + P * g.b / sigma2);
    const int pts = 201;
    // phi depends only on beta; evaluate it once per grid row
    std::vector<double> phi(pts);
    for (int bi = 0; bi < pts; ++bi) {
      const double beta = static_cast<double>(bi) / (pts - 1);
      phi[bi] = expected_log2_term(g.b, beta * a * d, P, sigma2, cfg);
    }
    double best = -1.0;
    for (int ti = 0; ti < pts; ++ti) {
      const double tau = T * ti / (pts - 1);
      for (int bi = 0; bi < pts; ++bi) {
        const double beta = static_cast<double>(bi) / (pts - 1);
        if (W * tau * (phi[bi] - r0) < cfg.min_pt_gain) continue;
        const double harvest = cfg.eh_efficiency * P * a * ((1.0 - beta) * tau + (T - tau));
        if (harvest < cfg.bc_circuit_power * tau) continue;
        const double su = W * tau / cfg.spreading_factor *
                          std::log2(1.0 + cfg.spreading_factor * beta * P * a * d / sigma2);
        best = std::max(best, su);
      }
    }
    REQUIRE(best > 0.0);
    CHECK(sol.rate >= best - 1e-6 * best);  // grid points are feasible candidates
    CHECK(sol.rate <= best * 1.02);         // and the grid is fine enough to get close
  }
  SUBCASE("orders of magnitude below the hybrid scheme") {
    const ScenarioConfig cfg = default_scenario(2);
    const ChannelGains g = build_channel_gains(cfg);
    const BaselineSolution trad = traditional_sr_baseline(cfg, g);
    const FixedSicSolution hybrid = algorithm1(cfg, g);
    REQUIRE(trad.feasible);
    REQUIRE(hybrid.feasible);
    CHECK(hybrid.total_su_rate / trad.rate > 10.0);
  }
}

TEST_CASE("grid oracle") {
  const ScenarioConfig cfg = default_scenario(1);
  const ChannelGains g = build_channel_gains(cfg);

  SUBCASE("impossible demands find nothing") {
    ScenarioConfig hard = cfg;
    hard.min_pt_gain = 1e9;
    const GridResult r = grid_oracle(hard, build_channel_gains(hard), GridSpec{9, 1.0, 0});
    CHECK(!r.found);
  }
  SUBCASE("nested grids never lose value") {
    const GridResult g9 = grid_oracle(cfg, g, GridSpec{9, 1.0, 0});
    const GridResult g17 = grid_oracle(cfg, g, GridSpec{17, 1.0, 0});
    const GridResult g33 = grid_oracle(cfg, g, GridSpec{33, 1.0, 0});
    REQUIRE(g9.found);
    REQUIRE(g17.found);
    REQUIRE(g33.found);
    CHECK(g17.objective >= g9.objective - 1e-12);
    CHECK(g33.objective >= g17.objective - 1e-12);
    // frozen regression pins
    CHECK(rel(g17.objective, 32685.0209373) < 1e-6);
    CHECK(rel(g9.objective, 31159.0524407) < 1e-6);
  }
  SUBCASE("zoom refinement never loses value") {
    const GridResult flat = grid_oracle(cfg, g, GridSpec{17, 1.0, 0});
    const GridResult zoomed = grid_oracle(cfg, g, GridSpec{17, 1.0, 2});
    CHECK(zoomed.objective >= flat.objective - 1e-12);
  }
  SUBCASE("stays below the continuous solver at zero demand") {
    ScenarioConfig easy = cfg;
    easy.min_pt_gain = 0.0;
    const ChannelGains ge = build_channel_gains(easy);
    const GridResult r = grid_oracle(easy, ge, GridSpec{17, 1.0, 0});
    const FixedSicSolution sol = algorithm1(easy, ge);
    REQUIRE(r.found);
    REQUIRE(sol.feasible);
    CHECK(r.objective <= sol.total_su_rate * (1.0 + 1e-6));
  }
  SUBCASE("best grid point passes the raw audit") {
    const GridResult r = grid_oracle(cfg, g, GridSpec{17, 1.0, 1});
    REQUIRE(r.found);
    const SlackReport audit = audit_solution(r.best, SicOrdering::all_pt_first(1), cfg, g);
    CHECK(audit.pass(1e-6));
    CHECK(rel(total_su_rate(r.best, SicOrdering::all_pt_first(1), g, cfg), r.objective) < 1e-9);
  }
}

TEST_CASE("exhaustive ordering oracle") {
  SUBCASE("single user has two orderings") {
    const ScenarioConfig cfg = default_scenario(1);
    const ChannelGains g = build_channel_gains(cfg);
    const ExhaustiveSicResult r = exhaustive_sic_oracle(cfg, g);
    REQUIRE(r.feasible);
    CHECK(r.evaluated == 2);
    CHECK(rel(r.rate, 32731.5274625) < 1e-6);
  }
  SUBCASE("two users, gentle demand") {
    const ScenarioConfig cfg = default_scenario(2);
    const ChannelGains g = build_channel_gains(cfg);
    const ExhaustiveSicResult r = exhaustive_sic_oracle(cfg, g);
    REQUIRE(r.feasible);
    CHECK(r.evaluated == 4);
    CHECK(rel(r.rate, 49113.6493922) < 1e-6);

    const DynamicSicSolution dyn = algorithm2(cfg, g);
    REQUIRE(dyn.feasible);
    CHECK(r.rate >= dyn.total_su_rate * (1.0 - 0.02));
    CHECK(rel(dyn.total_su_rate, r.rate) < 0.02);
    for (int i = 0; i < 2; ++i) {
      CHECK(dyn.ordering.alpha_b[i] == r.ordering.alpha_b[i]);
      CHECK(dyn.ordering.alpha_a[i] == r.ordering.alpha_a[i]);
    }
  }
}

TEST_CASE("constraint auditor") {
  const ScenarioConfig base = default_scenario(2);
  const ChannelGains g = build_channel_gains(base);
  const AllocationVars zeros = AllocationVars::zeros(2);

  SUBCASE("idle network, zero demand") {
    ScenarioConfig cfg = base;
    cfg.min_pt_gain = 0.0;
    const SlackReport r = audit_solution(zeros, SicOrdering::all_pt_first(2), cfg, g);
    CHECK(r.pass(1e-7));
  }
  SUBCASE("idle network cannot supply a positive gain") {
    const SlackReport r = audit_solution(zeros, SicOrdering::all_pt_first(2), base, g);
    CHECK(!r.pass(1e-7));
    CHECK(r.worst_relative() < 0.0);
  }
}

TEST_CASE("raw objective equals the transformed program objective") {
  const ScenarioConfig cfg = default_scenario(2);
  const ChannelGains g = build_channel_gains(cfg);
  P3Anchor anchor;
  anchor.p_tr_anchor = {0.03, 0.01};
  const cvx::SmoothConcaveProgram p = assemble_p3(cfg, g, anchor);

  AllocationVars v = AllocationVars::zeros(2);
  v.tau = {0.15, 0.2};
  v.beta = {0.6, 0.3};
  v.t = {0.1, 0.05};
  v.p_tr = {0.02, 0.04};
  v.T_a = 0.4;
  v.T_b = 0.45;

  Eigen::VectorXd x(p.n_vars);
  for (int i = 0; i < 2; ++i) {
    x[i] = v.tau[i];
    x[2 + i] = v.t[i];
    x[4 + i] = v.tau[i] * v.beta[i];
    x[6 + i] = v.t[i] * v.p_tr[i];
  }
  x[8] = v.T_a;
  x[9] = v.T_b;

  const double raw = total_su_rate(v, SicOrdering::all_pt_first(2), g, cfg);
  const double transformed = cfg.bandwidth * p.objective(x).value;
  CHECK(rel(raw, transformed) < 1e-9);
}
