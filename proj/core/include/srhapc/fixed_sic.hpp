#pragma once

#include "srhapc/cvxcore.hpp"
#include "srhapc/ratemodel.hpp"
#include "srhapc/scenario.hpp"

#include <vector>

namespace srhapc {

/// Linearization point P_tr_i^(L) for the active-slot PT-rate Taylor bound.
struct P3Anchor {
  std::vector<double> p_tr_anchor;
};

struct FixedSicSolution {
  AllocationVars vars;
  std::vector<double> q;  // tau_i beta_i
  std::vector<double> z;  // t_i p_tr_i
  double total_su_rate = 0.0;
  double pt_rate_gain = 0.0;
  std::vector<double> sca_trace;  // objective (bit/s) after each SCA solve
  bool converged = false;
  bool feasible = false;
  int solver_iterations = 0;  // Newton steps over all SCA rounds
};

/// PT rate in an active slot under decode-PT-first: W t log2(1 + P_p b/(sigma^2 + p_tr d_i)).
double f_pt_ac(double p_tr, double t, int i, const ChannelGains& gains,
               const ScenarioConfig& cfg);
/// Its derivative in p_tr (negative for positive gains).
double f_prime_pt_ac(double p_tr, double t, int i, const ChannelGains& gains,
                     const ScenarioConfig& cfg);
/// First-order bound f(anchor) + f'(anchor)(p_tr - anchor) <= f(p_tr).
double taylor_lower_bound(double p_tr, double anchor, double t, int i,
                          const ChannelGains& gains, const ScenarioConfig& cfg);

/// The convex restriction of the fixed-order problem in variables
/// (tau_i, t_i, q_i, z_i, T_a, T_b); objective and rate-gain row are scaled
/// by 1/W inside the program.
cvx::SmoothConcaveProgram assemble_p3(const ScenarioConfig& cfg, const ChannelGains& gains,
                                      const P3Anchor& anchor);

/// SCA loop: solve the restriction, re-anchor at z/t, repeat. Trace is
/// nondecreasing by construction (a solve that loses objective is rejected
/// and the loop stops at the incumbent).
FixedSicSolution algorithm1(const ScenarioConfig& cfg, const ChannelGains& gains);

struct PropositionAudit {
  double rate_gain_slack = 0.0;   // (Delta1 + Delta2) - Delta, bit/s
  double rate_gain_scale = 0.0;
  std::vector<double> energy_slack;  // harvested - consumed, joules
  std::vector<double> energy_scale;
  double time_slack = 0.0;        // T - (T_a + T_b)
  bool prop1 = false;  // some rate-gain/energy constraint is tight
  bool prop2 = false;  // block fully used
};

PropositionAudit proposition_audit(const FixedSicSolution& sol, const ScenarioConfig& cfg,
                                   const ChannelGains& gains, double audit_tol = 1e-4);

}  // namespace srhapc
