#pragma once

#include "srhapc/fixed_sic.hpp"
#include "srhapc/ratemodel.hpp"
#include "srhapc/scenario.hpp"

#include <string>
#include <vector>

namespace srhapc {

struct BaselineSolution {
  double rate = 0.0;
  std::vector<double> tau;
  std::vector<double> beta;
  bool feasible = false;
};

/// TDMA backscatter-only reference: T_b = T, no active slots, same rate-gain
/// and energy-causality structure restricted to the backscatter terms.
BaselineSolution traditional_sr_baseline(const ScenarioConfig& cfg, const ChannelGains& gains);

struct GridSpec {
  int points_per_dim = 17;
  double p_tr_cap = 1.0;  // watts; grid upper bound for K >= 2 power axes
  int zoom_rounds = 0;    // re-scan shrunk box around the incumbent
};

struct GridResult {
  double objective = 0.0;
  AllocationVars best;
  bool found = false;
};

/// Brute-force scan over (tau_i, beta_i, t_i) per SU. T_b is eliminated
/// exactly (harvesting depends on the phase split only through T_a + T_b = T)
/// and K=1 additionally eliminates p_tr by bisection on the binding
/// constraint; K=2 grids both powers up to p_tr_cap.
GridResult grid_oracle(const ScenarioConfig& cfg, const ChannelGains& gains,
                       const GridSpec& spec = {});

struct ExhaustiveSicResult {
  SicOrdering ordering;
  FixedSicSolution best;
  double rate = 0.0;
  bool feasible = false;
  int evaluated = 0;
};

/// All 2^K per-slot decode orders, each solved with the inner SCA.
ExhaustiveSicResult exhaustive_sic_oracle(const ScenarioConfig& cfg, const ChannelGains& gains);

struct SlackReport {
  struct Entry {
    std::string name;
    double slack = 0.0;  // >= 0 means satisfied
    double scale = 1.0;
  };
  std::vector<Entry> entries;
  bool pass(double rel_tol = 1e-7) const;
  double worst_relative() const;  // min slack/scale over entries
};

/// Re-evaluates every constraint of the original problem from the raw
/// definitions (no transformed variables).
SlackReport audit_solution(const AllocationVars& vars, const SicOrdering& ordering,
                           const ScenarioConfig& cfg, const ChannelGains& gains);

}  // namespace srhapc
