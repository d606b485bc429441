#pragma once

// Internal: shared assembly of the block-allocation program in the
// transformed variables (tau, t, q = tau beta, z = t p_tr, T_a, T_b).
// The fixed-order restriction and its ordering-aware variant are the same
// program with different per-slot decode weights.

#include "srhapc/cvxcore.hpp"
#include "srhapc/fixed_sic.hpp"
#include "srhapc/ratemodel.hpp"
#include "srhapc/scenario.hpp"

#include <Eigen/Dense>

#include <vector>

namespace srhapc::detail {

struct Layout {
  int K = 0;
  int n() const { return 4 * K + 2; }
  int tau(int i) const { return i; }
  int t(int i) const { return K + i; }
  int q(int i) const { return 2 * K + i; }
  int z(int i) const { return 3 * K + i; }
  int Ta() const { return 4 * K; }
  int Tb() const { return 4 * K + 1; }
};

double noise_var(const ScenarioConfig& cfg);
/// log2(1 + P_p b / sigma^2)
double ref_spectral(const ChannelGains& gains, const ScenarioConfig& cfg);
/// log2(1 + P_p b / (p_tr d_i + sigma^2)) and its p_tr derivative
double ac_pt_spectral(double p_tr, int i, const ChannelGains& gains, const ScenarioConfig& cfg);
double ac_pt_spectral_prime(double p_tr, int i, const ChannelGains& gains,
                            const ScenarioConfig& cfg);

/// Objective and rate-gain row carry a 1/W scale so the program is O(1)
/// conditioned; reported rates are rescaled by the callers.
cvx::SmoothConcaveProgram build_allocation_program(const ScenarioConfig& cfg,
                                                   const ChannelGains& gains,
                                                   const SicOrdering& ordering,
                                                   const P3Anchor& anchor);

struct Recovered {
  AllocationVars vars;
  std::vector<double> q;
  std::vector<double> z;
};
/// beta = q/tau (0 when tau <= 1e-12), p_tr = z/t (0 when t < 1e-9).
Recovered recover_allocation(const Eigen::VectorXd& x, const ScenarioConfig& cfg);

/// Scaled rate-gain row value at x: exact (quadrature) version and the
/// version with the decode-PT-first AC term linearized at `anchor`.
double scaled_gain_exact(const Eigen::VectorXd& x, const ScenarioConfig& cfg,
                         const ChannelGains& gains, const SicOrdering& ordering);
double scaled_gain_linearized(const Eigen::VectorXd& x, const ScenarioConfig& cfg,
                              const ChannelGains& gains, const SicOrdering& ordering,
                              const P3Anchor& anchor);

struct ScaResult {
  Eigen::VectorXd x;
  P3Anchor anchor;                  // fixed-point anchor (z/t at the incumbent)
  std::vector<double> trace_scaled; // solver objective after each accepted solve
  std::vector<double> anchor_norm_trace;  // |p_anchor|_2 after each re-anchor
  std::vector<double> gain_slack_trace;   // exact scaled rate-gain row value per iterate
  bool feasible = false;
  bool converged = false;
  int solver_iterations = 0;
};

/// Inner SCA shared by both algorithms: solve at the anchor, re-anchor at
/// z/t, keep the incumbent when a solve loses objective (trace stays
/// nondecreasing by construction).
ScaResult run_sca(const ScenarioConfig& cfg, const ChannelGains& gains,
                  const SicOrdering& ordering, const P3Anchor& init_anchor,
                  const Eigen::VectorXd* warm_start);

}  // namespace srhapc::detail
