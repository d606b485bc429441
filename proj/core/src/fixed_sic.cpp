#include "srhapc/fixed_sic.hpp"

#include "program_builder.hpp"

#include <cmath>
#include <stdexcept>

namespace srhapc {

double f_pt_ac(double p_tr, double t, int i, const ChannelGains& gains,
               const ScenarioConfig& cfg) {
  if (p_tr < 0.0 || t < 0.0) throw std::invalid_argument("f_pt_ac: p_tr and t must be >= 0");
  if (i < 0 || i >= cfg.num_sus) throw std::invalid_argument("f_pt_ac: index out of range");
  return cfg.bandwidth * t * detail::ac_pt_spectral(p_tr, i, gains, cfg);
}

double f_prime_pt_ac(double p_tr, double t, int i, const ChannelGains& gains,
                     const ScenarioConfig& cfg) {
  if (p_tr < 0.0 || t < 0.0) throw std::invalid_argument("f_prime_pt_ac: p_tr and t must be >= 0");
  if (i < 0 || i >= cfg.num_sus) throw std::invalid_argument("f_prime_pt_ac: index out of range");
  return cfg.bandwidth * t * detail::ac_pt_spectral_prime(p_tr, i, gains, cfg);
}

double taylor_lower_bound(double p_tr, double anchor, double t, int i,
                          const ChannelGains& gains, const ScenarioConfig& cfg) {
  if (anchor < 0.0) throw std::invalid_argument("taylor_lower_bound: anchor must be >= 0");
  return f_pt_ac(anchor, t, i, gains, cfg) +
         f_prime_pt_ac(anchor, t, i, gains, cfg) * (p_tr - anchor);
}

cvx::SmoothConcaveProgram assemble_p3(const ScenarioConfig& cfg, const ChannelGains& gains,
                                      const P3Anchor& anchor) {
  return detail::build_allocation_program(cfg, gains, SicOrdering::all_pt_first(cfg.num_sus),
                                          anchor);
}

FixedSicSolution algorithm1(const ScenarioConfig& cfg, const ChannelGains& gains) {
  cfg.validate();
  const int K = cfg.num_sus;
  P3Anchor anchor;
  anchor.p_tr_anchor.resize(K);
  for (int i = 0; i < K; ++i) {
    // start the linearization at the SU's average harvestable power
    anchor.p_tr_anchor[i] = cfg.eh_efficiency * cfg.pt_power * gains.a[i];
  }
  const SicOrdering ordering = SicOrdering::all_pt_first(K);
  const detail::ScaResult sca = detail::run_sca(cfg, gains, ordering, anchor, nullptr);

  FixedSicSolution sol;
  sol.solver_iterations = sca.solver_iterations;
  sol.feasible = sca.feasible;
  sol.converged = sca.converged;
  if (!sca.feasible) {
    sol.vars = AllocationVars::zeros(K);
    sol.q.assign(K, 0.0);
    sol.z.assign(K, 0.0);
    return sol;
  }
  const detail::Recovered rec = detail::recover_allocation(sca.x, cfg);
  sol.vars = rec.vars;
  sol.q = rec.q;
  sol.z = rec.z;
  sol.total_su_rate = total_su_rate(sol.vars, ordering, gains, cfg);
  sol.pt_rate_gain = pt_rate_gain(sol.vars, ordering, gains, cfg);
  sol.sca_trace.reserve(sca.trace_scaled.size());
  for (double v : sca.trace_scaled) sol.sca_trace.push_back(v * cfg.bandwidth);
  return sol;
}

PropositionAudit proposition_audit(const FixedSicSolution& sol, const ScenarioConfig& cfg,
                                   const ChannelGains& gains, double audit_tol) {
  if (!(audit_tol > 0.0)) throw std::invalid_argument("proposition_audit: tol must be positive");
  PropositionAudit rep;
  const int K = cfg.num_sus;
  const SicOrdering ordering = SicOrdering::all_pt_first(K);
  rep.rate_gain_slack = pt_rate_gain(sol.vars, ordering, gains, cfg) - cfg.min_pt_gain;
  rep.rate_gain_scale = std::max(1.0, cfg.min_pt_gain);
  const EnergyReport er = energy_report(sol.vars, gains, cfg);
  rep.energy_slack.resize(K);
  rep.energy_scale.resize(K);
  double worst_rel = std::abs(rep.rate_gain_slack) / rep.rate_gain_scale;
  for (int i = 0; i < K; ++i) {
    const double harvested = er.harvested_bc[i] + er.harvested_ac[i];
    const double consumed = er.consumed_bc[i] + er.consumed_ac[i];
    rep.energy_slack[i] = harvested - consumed;
    rep.energy_scale[i] = std::max(harvested + consumed, 1e-12);
    worst_rel = std::min(worst_rel, std::abs(rep.energy_slack[i]) / rep.energy_scale[i]);
  }
  rep.time_slack = cfg.block_duration - (sol.vars.T_a + sol.vars.T_b);
  // Proposition-style flags: some rate-gain or energy constraint is tight,
  // and the block is fully used.
  rep.prop1 = worst_rel <= audit_tol;
  rep.prop2 = std::abs(rep.time_slack) <= audit_tol * cfg.block_duration;
  return rep;
}

}  // namespace srhapc
