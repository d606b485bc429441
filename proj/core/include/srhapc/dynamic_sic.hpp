#pragma once

#include "srhapc/cvxcore.hpp"
#include "srhapc/fixed_sic.hpp"
#include "srhapc/ratemodel.hpp"
#include "srhapc/scenario.hpp"

#include <vector>

namespace srhapc {

struct PenaltyState {
  double zeta = 0.0;                 // penalty weight, rate-scaled
  std::vector<double> anchor_b;      // alpha_b^(r)
  std::vector<double> anchor_a;      // alpha_a^(r)
};

/// Continuous block frozen after an inner SCA pass, in transformed variables
/// (mu = tau beta, chi = t p_tr) plus the final Taylor anchor.
struct ContinuousFix {
  std::vector<double> tau;
  std::vector<double> t;
  std::vector<double> mu;
  std::vector<double> chi;
  double T_a = 0.0;
  double T_b = 0.0;
  P3Anchor anchor;
};

struct DynamicSicSolution {
  AllocationVars vars;
  std::vector<double> mu;
  std::vector<double> chi;
  SicOrdering ordering;
  double total_su_rate = 0.0;
  double pt_rate_gain = 0.0;
  std::vector<double> bcd_trace;                 // rate after each outer pass
  std::vector<std::vector<double>> inner_traces; // SCA trace per outer pass
  /// Signed residuals of the monotone chain, one entry per outer pass:
  ///  tightness_a  |R_total - R_lb| at the inner-converged point (anchored there)
  ///  inner_b      min over inner steps of trace[k+1] - trace[k]
  ///  ordering_c   frozen-point objective(new ordering) - objective(old)
  ///  bound_d      R_total - R_lb at the adopted point
  struct ChainCheck {
    double tightness_a = 0.0;
    double inner_b = 0.0;
    double ordering_c = 0.0;
    double bound_d = 0.0;
  };
  std::vector<ChainCheck> chain_checks;
  std::vector<double> binary_gap_trace;  // final relaxed gap per outer pass
  std::vector<double> zeta_trace;        // final penalty weight per outer pass
  std::vector<double> pass_pt_gain;      // exact PT gain at each adopted iterate
  double final_binary_gap = 0.0;
  bool used_enumeration_fallback = false;
  int ordering_refinements = 0;  // stalled passes re-checked by full re-solve
  bool converged = false;
  bool feasible = false;
  int solver_iterations = 0;
};

/// Ordering-aware variant of the P3 assembly: decode-PT-first slots keep the
/// Taylor-bounded PT term and the sigma^2-denominator SU rate; decode-SU-first
/// slots use the interference denominator P_p b + sigma^2 and contribute no
/// PT-gain term (exact cancellation). All-PT-first reproduces assemble_p3.
cvx::SmoothConcaveProgram assemble_p411(const ScenarioConfig& cfg, const ChannelGains& gains,
                                        const SicOrdering& ordering, const P3Anchor& anchor);

/// Taylor upper bound of the integrality penalty sum(alpha - alpha^2):
/// sum_U sum_i [alpha - anchor^2 - 2 anchor (alpha - anchor)].
double penalty_upper_bound(const SicOrdering& alpha, const SicOrdering& anchor);

/// Rate constants of the ordering subproblem, frozen at a continuous point.
struct FrozenRates {
  std::vector<double> su_bc;          // backscatter SU rate, bit/s
  std::vector<double> su_ac_pt_first; // active SU rate, clean channel
  std::vector<double> su_ac_su_first; // active SU rate, PT interference
  std::vector<double> gain_bc;        // backscatter PT gain net of the reference
  std::vector<double> gain_ac_pt_first;  // linearized active PT gain net of the reference
  std::vector<double> ref_ac;         // reference paid by an active slot (W t r0)
  // decode-SU-first net active gain is exactly 0: the slot rate equals the reference
};

FrozenRates frozen_rates(const ScenarioConfig& cfg, const ChannelGains& gains,
                         const ContinuousFix& fix);

/// Ordering LP in alpha (2K variables) with the penalty upper bound.
cvx::SmoothConcaveProgram assemble_p423(const ScenarioConfig& cfg, const ChannelGains& gains,
                                        const ContinuousFix& fix, const PenaltyState& state);

struct PenaltyLoopDiag {
  std::vector<double> binary_gaps;
  double final_gap = 0.0;
  double final_zeta = 0.0;
  bool used_enumeration = false;
  bool feasible = true;
  int iterations = 0;
};

/// Penalty iteration on the ordering LP with zeta escalation, rounding, and
/// the K<=8 enumeration fallback.
SicOrdering sic_penalty_loop(const ScenarioConfig& cfg, const ChannelGains& gains,
                             const ContinuousFix& fix, PenaltyLoopDiag* diag = nullptr);

/// BCD alternation between the continuous subproblem (inner SCA) and the
/// ordering subproblem, with the monotone-chain checks recorded per pass.
DynamicSicSolution algorithm2(const ScenarioConfig& cfg, const ChannelGains& gains);

}  // namespace srhapc
