#pragma once

#include "srhapc/quadrature.hpp"
#include "srhapc/scenario.hpp"

#include <vector>

namespace srhapc {

/// One block's allocation: per-SU backscatter slot length tau_i with
/// reflection coefficient beta_i, active slot length t_i with transmit
/// power p_tr_i, and the phase durations T_b (backscatter) / T_a (active).
struct AllocationVars {
  std::vector<double> tau;
  std::vector<double> t;
  std::vector<double> beta;
  std::vector<double> p_tr;
  double T_a = 0.0;
  double T_b = 0.0;

  static AllocationVars zeros(int num_sus);
};

/// Per-slot SIC decode order: alpha_b = decode PT first, alpha_a = decode
/// SU first. Relaxed to [0,1] inside the penalty loop, binary once committed.
struct SicOrdering {
  std::vector<double> alpha_b;
  std::vector<double> alpha_a;

  static SicOrdering all_pt_first(int num_sus);
  static SicOrdering all_su_first(int num_sus);
  bool committed() const;  // every entry in {0,1}, alpha_a + alpha_b <= 1
};

struct EnergyReport {
  std::vector<double> harvested_bc;
  std::vector<double> harvested_ac;
  std::vector<double> consumed_bc;
  std::vector<double> consumed_ac;
};

struct SlotRates {
  double pt_rate = 0.0;  // bit/s
  double su_rate = 0.0;  // bit/s
};

/// E_c[log2(1 + P_p |sqrt(b) + sqrt(scatter) c|^2 / noise)] in bits/symbol.
double expected_log2_term(double los_gain, double scatter_gain, double pt_power,
                          double noise_var, const ExpectedLogGrid& grid);
/// Convenience overload using cfg.quadrature_order through the grid cache.
double expected_log2_term(double los_gain, double scatter_gain, double pt_power,
                          double noise_var, const ScenarioConfig& cfg);

/// Backscatter-slot rates of SU i: spread SU rate and the PT rate with the
/// expectation over the backscatter symbol.
SlotRates bc_slot_rates(int i, const AllocationVars& vars, const ChannelGains& gains,
                        const ScenarioConfig& cfg);

/// Active-slot rates of SU i under the committed per-slot decode order.
/// Throws when the slot has t_i > 0 but no decode rule.
SlotRates ac_slot_rates(int i, const AllocationVars& vars, const SicOrdering& ordering,
                        const ChannelGains& gains, const ScenarioConfig& cfg);

/// PT rate gain versus the SU-free reference W (tau_i + t_i) log2(1 + P_p b / sigma^2),
/// summed over SUs (Delta_1 + Delta_2 generalized to both decode orders).
double pt_rate_gain(const AllocationVars& vars, const SicOrdering& ordering,
                    const ChannelGains& gains, const ScenarioConfig& cfg);

/// Harvested/consumed energy per SU over the block.
/// Throws when T_b < tau_i or T_a < t_i (negative harvesting window).
EnergyReport energy_report(const AllocationVars& vars, const ChannelGains& gains,
                           const ScenarioConfig& cfg);

double total_su_rate(const AllocationVars& vars, const SicOrdering& ordering,
                     const ChannelGains& gains, const ScenarioConfig& cfg);

}  // namespace srhapc
