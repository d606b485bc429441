#include "srhapc/ratemodel.hpp"

#include <cmath>
#include <stdexcept>

namespace srhapc {

AllocationVars AllocationVars::zeros(int num_sus) {
  AllocationVars v;
  v.tau.assign(num_sus, 0.0);
  v.t.assign(num_sus, 0.0);
  v.beta.assign(num_sus, 0.0);
  v.p_tr.assign(num_sus, 0.0);
  return v;
}

SicOrdering SicOrdering::all_pt_first(int num_sus) {
  SicOrdering o;
  o.alpha_b.assign(num_sus, 1.0);
  o.alpha_a.assign(num_sus, 0.0);
  return o;
}

SicOrdering SicOrdering::all_su_first(int num_sus) {
  SicOrdering o;
  o.alpha_b.assign(num_sus, 0.0);
  o.alpha_a.assign(num_sus, 1.0);
  return o;
}

bool SicOrdering::committed() const {
  if (alpha_a.size() != alpha_b.size()) return false;
  for (size_t i = 0; i < alpha_b.size(); ++i) {
    const bool b_bin = alpha_b[i] == 0.0 || alpha_b[i] == 1.0;
    const bool a_bin = alpha_a[i] == 0.0 || alpha_a[i] == 1.0;
    if (!b_bin || !a_bin || alpha_a[i] + alpha_b[i] > 1.0) return false;
  }
  return true;
}

namespace {

void check_vars(const AllocationVars& vars, const ScenarioConfig& cfg) {
  const size_t K = static_cast<size_t>(cfg.num_sus);
  if (vars.tau.size() != K || vars.t.size() != K || vars.beta.size() != K ||
      vars.p_tr.size() != K) {
    throw std::invalid_argument("allocation: per-SU vectors must have num_sus entries");
  }
  auto bad = [](double v) { return !std::isfinite(v) || v < 0.0; };
  for (size_t i = 0; i < K; ++i) {
    if (bad(vars.tau[i]) || bad(vars.t[i]) || bad(vars.p_tr[i]) || bad(vars.beta[i]) ||
        vars.beta[i] > 1.0) {
      throw std::invalid_argument("allocation: entries must be finite, nonnegative, beta in [0,1]");
    }
  }
  if (bad(vars.T_a) || bad(vars.T_b)) {
    throw std::invalid_argument("allocation: phase durations must be finite and nonnegative");
  }
}

void check_ordering(const SicOrdering& ordering, const ScenarioConfig& cfg) {
  if (ordering.alpha_b.size() != static_cast<size_t>(cfg.num_sus) ||
      ordering.alpha_a.size() != static_cast<size_t>(cfg.num_sus)) {
    throw std::invalid_argument("ordering: per-SU vectors must have num_sus entries");
  }
}

double noise_var(const ScenarioConfig& cfg) {
  return noise_power(cfg.noise_psd, cfg.bandwidth);
}

// Spectral reference of the SU-free direct link, log2(1 + P_p b / sigma^2).
// Shared between the decode-SU-first slot rate and the rate-gain reference
// so their difference cancels exactly.
double reference_spectral(const ChannelGains& gains, const ScenarioConfig& cfg) {
  return std::log2(1.0 + cfg.pt_power * gains.b / noise_var(cfg));
}

}  // namespace

double expected_log2_term(double los_gain, double scatter_gain, double pt_power,
                          double noise, const ExpectedLogGrid& grid) {
  return grid.value(los_gain, scatter_gain, pt_power, noise);
}

double expected_log2_term(double los_gain, double scatter_gain, double pt_power,
                          double noise, const ScenarioConfig& cfg) {
  return quadrature_grid(cfg.quadrature_order)->value(los_gain, scatter_gain, pt_power, noise);
}

SlotRates bc_slot_rates(int i, const AllocationVars& vars, const ChannelGains& gains,
                        const ScenarioConfig& cfg) {
  check_vars(vars, cfg);
  if (i < 0 || i >= cfg.num_sus) throw std::invalid_argument("bc_slot_rates: index out of range");
  const double sigma2 = noise_var(cfg);
  const double tau = vars.tau[i];
  const double beta = vars.beta[i];
  SlotRates r;
  if (tau == 0.0) return r;
  const double ad = gains.a[i] * gains.d[i];
  // Spread backscatter link: despreading trades a 1/N rate prefactor for an
  // N-fold SNR boost.
  r.su_rate = cfg.bandwidth * tau / cfg.spreading_factor *
              std::log2(1.0 + cfg.spreading_factor * beta * cfg.pt_power * ad / sigma2);
  r.pt_rate = cfg.bandwidth * tau *
              expected_log2_term(gains.b, ad * beta, cfg.pt_power, sigma2, cfg);
  return r;
}

SlotRates ac_slot_rates(int i, const AllocationVars& vars, const SicOrdering& ordering,
                        const ChannelGains& gains, const ScenarioConfig& cfg) {
  check_vars(vars, cfg);
  check_ordering(ordering, cfg);
  if (i < 0 || i >= cfg.num_sus) throw std::invalid_argument("ac_slot_rates: index out of range");
  if (!ordering.committed()) {
    throw std::invalid_argument("ac_slot_rates: ordering must be committed (binary)");
  }
  const double t = vars.t[i];
  SlotRates r;
  if (t == 0.0) return r;
  if (ordering.alpha_a[i] + ordering.alpha_b[i] == 0.0) {
    throw std::invalid_argument("ac_slot_rates: active slot has no decode rule");
  }
  const double sigma2 = noise_var(cfg);
  const double pb = cfg.pt_power * gains.b;
  const double pd = vars.p_tr[i] * gains.d[i];
  if (ordering.alpha_b[i] == 1.0) {
    // Decode PT first: the SU signal is interference for the PT, then gets a
    // clean channel after cancellation.
    r.pt_rate = cfg.bandwidth * t * std::log2(1.0 + pb / (pd + sigma2));
    r.su_rate = cfg.bandwidth * t * std::log2(1.0 + pd / sigma2);
  } else {
    // Decode SU first: roles swap.
    r.su_rate = cfg.bandwidth * t * std::log2(1.0 + pd / (pb + sigma2));
    r.pt_rate = cfg.bandwidth * t * reference_spectral(gains, cfg);
  }
  return r;
}

double pt_rate_gain(const AllocationVars& vars, const SicOrdering& ordering,
                    const ChannelGains& gains, const ScenarioConfig& cfg) {
  check_vars(vars, cfg);
  check_ordering(ordering, cfg);
  const double sigma2 = noise_var(cfg);
  const double r0 = reference_spectral(gains, cfg);
  const double pb = cfg.pt_power * gains.b;
  double gain = 0.0;
  for (int i = 0; i < cfg.num_sus; ++i) {
    const double tau = vars.tau[i];
    const double t = vars.t[i];
    if (tau > 0.0) {
      const double phi = expected_log2_term(gains.b, gains.a[i] * gains.d[i] * vars.beta[i],
                                            cfg.pt_power, sigma2, cfg);
      gain += cfg.bandwidth * tau * phi - cfg.bandwidth * tau * r0;
    }
    if (t > 0.0) {
      const double pd = vars.p_tr[i] * gains.d[i];
      const double pt_first = cfg.bandwidth * t * std::log2(1.0 + pb / (pd + sigma2));
      const double su_first = cfg.bandwidth * t * r0;
      gain += ordering.alpha_b[i] * pt_first + ordering.alpha_a[i] * su_first -
              cfg.bandwidth * t * r0;
    }
  }
  return gain;
}

EnergyReport energy_report(const AllocationVars& vars, const ChannelGains& gains,
                           const ScenarioConfig& cfg) {
  check_vars(vars, cfg);
  const int K = cfg.num_sus;
  for (int i = 0; i < K; ++i) {
    if (vars.T_b < vars.tau[i] || vars.T_a < vars.t[i]) {
      throw std::invalid_argument("energy_report: slot longer than its phase (negative harvesting window)");
    }
  }
  EnergyReport rep;
  rep.harvested_bc.assign(K, 0.0);
  rep.harvested_ac.assign(K, 0.0);
  rep.consumed_bc.assign(K, 0.0);
  rep.consumed_ac.assign(K, 0.0);
  const double eta = cfg.eh_efficiency;
  const double P = cfg.pt_power;
  for (int i = 0; i < K; ++i) {
    // Own slot (unreflected share), idle listening, and recycled
    // backscatter leakage from the other SUs' slots.
    double h_bc = eta * (1.0 - vars.beta[i]) * P * gains.a[i] * vars.tau[i] +
                  eta * P * gains.a[i] * (vars.T_b - vars.tau[i]);
    for (int j = 0; j < K; ++j) {
      if (j == i) continue;
      h_bc += eta * P * gains.a[j] * gains.f[i][j] * vars.beta[j] * vars.tau[j];
    }
    // PT illumination while others are active, plus recycled SU transmissions.
    double h_ac = eta * P * gains.a[i] * (vars.T_a - vars.t[i]);
    for (int j = 0; j < K; ++j) {
      if (j == i) continue;
      h_ac += eta * vars.p_tr[j] * gains.f[i][j] * vars.t[j];
    }
    rep.harvested_bc[i] = h_bc;
    rep.harvested_ac[i] = h_ac;
    rep.consumed_bc[i] = cfg.bc_circuit_power * vars.tau[i];
    rep.consumed_ac[i] = (vars.p_tr[i] + cfg.ac_circuit_power) * vars.t[i];
  }
  return rep;
}

double total_su_rate(const AllocationVars& vars, const SicOrdering& ordering,
                     const ChannelGains& gains, const ScenarioConfig& cfg) {
  check_vars(vars, cfg);
  check_ordering(ordering, cfg);
  const double sigma2 = noise_var(cfg);
  const double pb = cfg.pt_power * gains.b;
  double total = 0.0;
  for (int i = 0; i < cfg.num_sus; ++i) {
    total += bc_slot_rates(i, vars, gains, cfg).su_rate;
    const double t = vars.t[i];
    if (t > 0.0) {
      const double pd = vars.p_tr[i] * gains.d[i];
      const double pt_first = cfg.bandwidth * t * std::log2(1.0 + pd / sigma2);
      const double su_first = cfg.bandwidth * t * std::log2(1.0 + pd / (pb + sigma2));
      total += ordering.alpha_b[i] * pt_first + ordering.alpha_a[i] * su_first;
    }
  }
  return total;
}

}  // namespace srhapc
