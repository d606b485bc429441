#include "srhapc/oracles.hpp"

#include "program_builder.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace srhapc {
namespace {

std::vector<double> linspace(double lo, double hi, int pts) {
  std::vector<double> v(pts);
  if (pts == 1) {
    v[0] = lo;
    return v;
  }
  for (int k = 0; k < pts; ++k) v[k] = lo + (hi - lo) * k / (pts - 1);
  return v;
}

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

Range zoomed(const Range& r, double center) {
  const double w = (r.hi - r.lo) / 4.0;
  Range z;
  z.lo = std::max(r.lo, center - w);
  z.hi = std::min(r.hi, center + w);
  return z;
}

}  // namespace

BaselineSolution traditional_sr_baseline(const ScenarioConfig& cfg, const ChannelGains& gains) {
  cfg.validate();
  const int K = cfg.num_sus;
  const double T = cfg.block_duration;
  const double W = cfg.bandwidth;
  const double eta = cfg.eh_efficiency;
  const double P = cfg.pt_power;
  const double inv_N = 1.0 / cfg.spreading_factor;
  const double sigma2 = detail::noise_var(cfg);
  const double r0 = detail::ref_spectral(gains, cfg);
  const auto grid = quadrature_grid(cfg.quadrature_order);

  // variables [tau_0..tau_{K-1}, q_0..q_{K-1}], q = tau beta
  const int n = 2 * K;
  cvx::SmoothConcaveProgram prog;
  prog.n_vars = n;
  prog.lower = Eigen::VectorXd::Zero(n);
  prog.upper = Eigen::VectorXd::Constant(n, T);
  for (int i = 0; i < K; ++i) {
    cvx::LinearRow r;
    r.coeffs = Eigen::VectorXd::Zero(n);
    r.coeffs[K + i] = 1.0;
    r.coeffs[i] = -1.0;
    prog.linear_constraints.push_back(std::move(r));  // beta <= 1
  }
  {
    cvx::LinearRow r;
    r.coeffs = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < K; ++i) r.coeffs[i] = 1.0;
    r.rhs = T;
    prog.linear_constraints.push_back(std::move(r));  // TDMA packing
  }
  for (int i = 0; i < K; ++i) {
    // backscatter-only energy causality: circuit cost <= harvest over the
    // block minus the reflected share, plus recycling from the other slots
    cvx::LinearRow r;
    r.coeffs = Eigen::VectorXd::Zero(n);
    r.coeffs[i] = cfg.bc_circuit_power;
    r.coeffs[K + i] = eta * P * gains.a[i];
    for (int j = 0; j < K; ++j) {
      if (j != i) r.coeffs[K + j] = -eta * P * gains.a[j] * gains.f[i][j];
    }
    r.rhs = eta * P * gains.a[i] * T;
    prog.linear_constraints.push_back(std::move(r));
  }

  std::vector<double> g_su(K), g_phi(K);
  for (int i = 0; i < K; ++i) {
    const double ad = gains.a[i] * gains.d[i];
    g_su[i] = cfg.spreading_factor * P * ad / sigma2;
    g_phi[i] = ad;
  }

  prog.objective = [K, inv_N, g_su](const Eigen::VectorXd& x) {
    cvx::SmoothEval out;
    out.grad = Eigen::VectorXd::Zero(x.size());
    for (int i = 0; i < K; ++i) {
      double dt, dq;
      out.value += inv_N * cvx::perspective::value(g_su[i], x[i], x[K + i]);
      cvx::perspective::derivatives(g_su[i], x[i], x[K + i], dt, dq);
      out.grad[i] += inv_N * dt;
      out.grad[K + i] += inv_N * dq;
    }
    return out;
  };
  prog.objective_hess = [K, inv_N, g_su](const Eigen::VectorXd& x) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(x.size(), x.size());
    for (int i = 0; i < K; ++i) {
      double htt, htq, hqq;
      cvx::perspective::hessian(g_su[i], x[i], x[K + i], htt, htq, hqq);
      H(i, i) += inv_N * htt;
      H(i, K + i) += inv_N * htq;
      H(K + i, i) += inv_N * htq;
      H(K + i, K + i) += inv_N * hqq;
    }
    return H;
  };

  const double delta_scaled = cfg.min_pt_gain / W;
  const double P_cap = P;
  const double b_cap = gains.b;
  prog.smooth_constraints.push_back(cvx::SmoothConstraint{
      [K, g_phi, r0, delta_scaled, grid, P_cap, b_cap, sigma2](const Eigen::VectorXd& x) {
        cvx::SmoothEval out;
        out.grad = Eigen::VectorXd::Zero(x.size());
        out.value = -delta_scaled;
        for (int i = 0; i < K; ++i) {
          const double tau = x[i];
          if (tau > cvx::perspective::kTauFloor) {
            const double s = g_phi[i] * x[K + i] / tau;
            const auto e = grid->eval(b_cap, s, P_cap, sigma2);
            out.value += tau * e.value;
            out.grad[i] += e.value - s * e.d1;
            out.grad[K + i] += g_phi[i] * e.d1;
          }
          out.value += -r0 * tau;
          out.grad[i] += -r0;
        }
        return out;
      },
      [K, g_phi, grid, P_cap, b_cap, sigma2](const Eigen::VectorXd& x) {
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(x.size(), x.size());
        for (int i = 0; i < K; ++i) {
          const double tau = x[i];
          if (tau <= cvx::perspective::kTauFloor) continue;
          const double G = g_phi[i];
          const double s = G * x[K + i] / tau;
          const auto e = grid->eval(b_cap, s, P_cap, sigma2);
          H(i, i) = s * s * e.d2 / tau;
          H(i, K + i) = -G * s * e.d2 / tau;
          H(K + i, i) = H(i, K + i);
          H(K + i, K + i) = G * G * e.d2 / tau;
        }
        return H;
      }});

  Eigen::VectorXd hint(n);
  for (int i = 0; i < K; ++i) {
    hint[i] = 0.5 * T / K;
    hint[K + i] = 0.8 * hint[i];
  }
  prog.strict_interior_point = hint;

  cvx::SolveOptions sopts;
  sopts.tol = cfg.solver.tol;
  sopts.max_newton = cfg.solver.max_newton;
  sopts.barrier_mult = cfg.solver.barrier_mult;
  const cvx::Solution sol = cvx::solve(prog, sopts);

  BaselineSolution out;
  out.tau.assign(K, 0.0);
  out.beta.assign(K, 0.0);
  if (sol.status == cvx::SolveStatus::Infeasible ||
      sol.status == cvx::SolveStatus::NumericalFailure) {
    return out;
  }
  out.feasible = true;
  out.rate = W * sol.objective_value;
  for (int i = 0; i < K; ++i) {
    const double tau = std::max(0.0, sol.x[i]);
    out.tau[i] = tau;
    out.beta[i] =
        (tau > cvx::perspective::kTauFloor) ? std::min(1.0, std::max(0.0, sol.x[K + i]) / tau)
                                            : 0.0;
  }
  return out;
}

namespace {

/// Single-SU brute force: for each (tau, beta, t) the transmit power axis is
/// exact. The SU rate is increasing in p while both caps shrink, so the best
/// p is min(energy cap, rate cap); the rate cap comes from a bisection of the
/// decreasing gain.
GridResult grid_oracle_k1(const ScenarioConfig& cfg, const ChannelGains& gains,
                          const GridSpec& spec) {
  const double T = cfg.block_duration;
  const double W = cfg.bandwidth;
  const double eta = cfg.eh_efficiency;
  const double P = cfg.pt_power;
  const double inv_N = 1.0 / cfg.spreading_factor;
  const double sigma2 = detail::noise_var(cfg);
  const double r0 = detail::ref_spectral(gains, cfg);
  const double delta = cfg.min_pt_gain;
  const auto grid = quadrature_grid(cfg.quadrature_order);
  const double a = gains.a[0];
  const double d = gains.d[0];
  const double g_su = cfg.spreading_factor * P * a * d / sigma2;
  const int pts = spec.points_per_dim;

  GridResult res;
  double best = -std::numeric_limits<double>::infinity();
  AllocationVars best_vars = AllocationVars::zeros(1);

  Range r_tau{0.0, T}, r_beta{0.0, 1.0}, r_tf{0.0, 1.0};
  for (int round = 0; round <= spec.zoom_rounds; ++round) {
    const auto taus = linspace(r_tau.lo, r_tau.hi, pts);
    const auto betas = linspace(r_beta.lo, r_beta.hi, pts);
    const auto tfracs = linspace(r_tf.lo, r_tf.hi, pts);
    // Phi(beta) is tau-independent; cache it per grid row
    std::vector<double> phi(betas.size());
    for (std::size_t bi = 0; bi < betas.size(); ++bi) {
      phi[bi] = grid->value(gains.b, a * d * betas[bi], P, sigma2);
    }
    double c_tau = taus[0], c_beta = betas[0], c_tf = tfracs[0];
    for (std::size_t ti = 0; ti < taus.size(); ++ti) {
      const double tau = taus[ti];
      for (std::size_t bi = 0; bi < betas.size(); ++bi) {
        if (tau == 0.0 && bi > 0) break;
        const double beta = betas[bi];
        const double q = beta * tau;
        const double bc_gain = W * tau * (phi[bi] - r0);
        const double bc_su = W * inv_N * tau * std::log2(1.0 + g_su * beta);
        for (std::size_t fi = 0; fi < tfracs.size(); ++fi) {
          const double t = tfracs[fi] * (T - tau);
          if (t == 0.0 && fi > 0 && tau == T) break;
          const double harvest = eta * P * a * (T - t - q);
          const double circuit = cfg.bc_circuit_power * tau + cfg.ac_circuit_power * t;
          double su, gain, p = 0.0;
          if (t <= 0.0) {
            if (circuit > harvest) continue;
            su = bc_su;
            gain = bc_gain;
          } else {
            const double p_cap = (harvest - circuit) / t;
            if (p_cap < 0.0) continue;
            auto gain_at = [&](double pw) {
              return bc_gain + W * t * (detail::ac_pt_spectral(pw, 0, gains, cfg) - r0);
            };
            if (gain_at(p_cap) >= delta) {
              p = p_cap;
            } else if (gain_at(0.0) < delta) {
              continue;
            } else {
              double lo = 0.0, hi = p_cap;  // gain decreasing in p
              for (int it = 0; it < 100; ++it) {
                const double mid = 0.5 * (lo + hi);
                (gain_at(mid) >= delta ? lo : hi) = mid;
              }
              p = lo;
            }
            su = bc_su + W * t * std::log2(1.0 + p * d / sigma2);
            gain = gain_at(p);
          }
          if (gain < delta) continue;
          if (su > best) {
            best = su;
            best_vars.tau[0] = tau;
            best_vars.beta[0] = beta;
            best_vars.t[0] = t;
            best_vars.p_tr[0] = p;
            best_vars.T_a = t;
            best_vars.T_b = T - t;
            c_tau = tau;
            c_beta = beta;
            c_tf = tfracs[fi];
            res.found = true;
          }
        }
      }
    }
    if (!res.found) break;
    r_tau = zoomed(r_tau, c_tau);
    r_beta = zoomed(r_beta, c_beta);
    r_tf = zoomed(r_tf, c_tf);
  }
  if (res.found) {
    res.objective = best;
    res.best = best_vars;
  }
  return res;
}

GridResult grid_oracle_k2(const ScenarioConfig& cfg, const ChannelGains& gains,
                          const GridSpec& spec) {
  const double T = cfg.block_duration;
  const double W = cfg.bandwidth;
  const double eta = cfg.eh_efficiency;
  const double P = cfg.pt_power;
  const double inv_N = 1.0 / cfg.spreading_factor;
  const double sigma2 = detail::noise_var(cfg);
  const double r0 = detail::ref_spectral(gains, cfg);
  const double delta = cfg.min_pt_gain;
  const auto grid = quadrature_grid(cfg.quadrature_order);
  const int pts = spec.points_per_dim;

  GridResult res;
  double best = -std::numeric_limits<double>::infinity();
  AllocationVars best_vars = AllocationVars::zeros(2);

  std::array<Range, 2> r_tau{Range{0.0, T}, Range{0.0, T}};
  std::array<Range, 2> r_beta{Range{0.0, 1.0}, Range{0.0, 1.0}};
  std::array<Range, 2> r_t{Range{0.0, T}, Range{0.0, T}};
  std::array<Range, 2> r_p{Range{0.0, spec.p_tr_cap}, Range{0.0, spec.p_tr_cap}};

  for (int round = 0; round <= spec.zoom_rounds; ++round) {
    std::array<std::vector<double>, 2> taus, betas, ts, ps, phis, fs;
    for (int i = 0; i < 2; ++i) {
      taus[i] = linspace(r_tau[i].lo, r_tau[i].hi, pts);
      betas[i] = linspace(r_beta[i].lo, r_beta[i].hi, pts);
      ts[i] = linspace(r_t[i].lo, r_t[i].hi, pts);
      ps[i] = linspace(r_p[i].lo, r_p[i].hi, pts);
      phis[i].resize(betas[i].size());
      for (std::size_t k = 0; k < betas[i].size(); ++k) {
        phis[i][k] = grid->value(gains.b, gains.a[i] * gains.d[i] * betas[i][k], P, sigma2);
      }
      fs[i].resize(ps[i].size());
      for (std::size_t k = 0; k < ps[i].size(); ++k) {
        fs[i][k] = detail::ac_pt_spectral(ps[i][k], i, gains, cfg);
      }
    }
    for (std::size_t t0 = 0; t0 < taus[0].size(); ++t0)
      for (std::size_t t1 = 0; t1 < taus[1].size(); ++t1) {
        const double tau0 = taus[0][t0], tau1 = taus[1][t1];
        if (tau0 + tau1 > T) break;
        for (std::size_t b0 = 0; b0 < betas[0].size(); ++b0) {
          if (tau0 == 0.0 && b0 > 0) break;
          for (std::size_t b1 = 0; b1 < betas[1].size(); ++b1) {
            if (tau1 == 0.0 && b1 > 0) break;
            const double q0 = betas[0][b0] * tau0, q1 = betas[1][b1] * tau1;
            const double bc_gain = W * (tau0 * (phis[0][b0] - r0) + tau1 * (phis[1][b1] - r0));
            const double bc_su =
                W * inv_N *
                (tau0 * std::log2(1.0 + cfg.spreading_factor * P * gains.a[0] * gains.d[0] *
                                            betas[0][b0] / sigma2) +
                 tau1 * std::log2(1.0 + cfg.spreading_factor * P * gains.a[1] * gains.d[1] *
                                            betas[1][b1] / sigma2));
            for (std::size_t i0 = 0; i0 < ts[0].size(); ++i0) {
              const double ta0 = ts[0][i0];
              for (std::size_t i1 = 0; i1 < ts[1].size(); ++i1) {
                const double ta1 = ts[1][i1];
                if (tau0 + tau1 + ta0 + ta1 > T) break;
                for (std::size_t p0 = 0; p0 < ps[0].size(); ++p0) {
                  if (ta0 == 0.0 && p0 > 0) break;
                  for (std::size_t p1 = 0; p1 < ps[1].size(); ++p1) {
                    if (ta1 == 0.0 && p1 > 0) break;
                    const double pw0 = ps[0][p0], pw1 = ps[1][p1];
                    // energy causality with recycling from the peer slots
                    const double h0 = eta * P * gains.a[0] * (T - ta0 - q0) +
                                      eta * gains.f[0][1] * (P * gains.a[1] * q1 + pw1 * ta1);
                    if (cfg.bc_circuit_power * tau0 + cfg.ac_circuit_power * ta0 + pw0 * ta0 > h0)
                      continue;
                    const double h1 = eta * P * gains.a[1] * (T - ta1 - q1) +
                                      eta * gains.f[1][0] * (P * gains.a[0] * q0 + pw0 * ta0);
                    if (cfg.bc_circuit_power * tau1 + cfg.ac_circuit_power * ta1 + pw1 * ta1 > h1)
                      continue;
                    const double gain = bc_gain + W * (ta0 * (fs[0][p0] - r0) +
                                                       ta1 * (fs[1][p1] - r0));
                    if (gain < delta) continue;
                    const double su =
                        bc_su + W * (ta0 * std::log2(1.0 + pw0 * gains.d[0] / sigma2) +
                                     ta1 * std::log2(1.0 + pw1 * gains.d[1] / sigma2));
                    if (su > best) {
                      best = su;
                      best_vars.tau = {tau0, tau1};
                      best_vars.beta = {betas[0][b0], betas[1][b1]};
                      best_vars.t = {ta0, ta1};
                      best_vars.p_tr = {pw0, pw1};
                      best_vars.T_a = ta0 + ta1;
                      best_vars.T_b = T - best_vars.T_a;
                      res.found = true;
                    }
                  }
                }
              }
            }
          }
        }
      }
    if (!res.found) break;
    for (int i = 0; i < 2; ++i) {
      r_tau[i] = zoomed(r_tau[i], best_vars.tau[i]);
      r_beta[i] = zoomed(r_beta[i], best_vars.beta[i]);
      r_t[i] = zoomed(r_t[i], best_vars.t[i]);
      r_p[i] = zoomed(r_p[i], best_vars.p_tr[i]);
    }
  }
  if (res.found) {
    res.objective = best;
    res.best = best_vars;
  }
  return res;
}

}  // namespace

GridResult grid_oracle(const ScenarioConfig& cfg, const ChannelGains& gains,
                       const GridSpec& spec) {
  cfg.validate();
  if (spec.points_per_dim < 2) throw std::invalid_argument("grid oracle: need >= 2 points per dim");
  if (!(spec.p_tr_cap > 0.0)) throw std::invalid_argument("grid oracle: p_tr_cap must be > 0");
  if (spec.zoom_rounds < 0) throw std::invalid_argument("grid oracle: zoom_rounds must be >= 0");
  if (cfg.num_sus == 1) return grid_oracle_k1(cfg, gains, spec);
  if (cfg.num_sus == 2) return grid_oracle_k2(cfg, gains, spec);
  throw std::invalid_argument("grid oracle: supported for 1 or 2 SUs only");
}

ExhaustiveSicResult exhaustive_sic_oracle(const ScenarioConfig& cfg, const ChannelGains& gains) {
  cfg.validate();
  const int K = cfg.num_sus;
  if (K > 12) throw std::invalid_argument("exhaustive oracle: 2^K orders, needs num_sus <= 12");
  ExhaustiveSicResult out;
  out.ordering = SicOrdering::all_pt_first(K);
  double best = -std::numeric_limits<double>::infinity();
  for (long mask = 0; mask < (1L << K); ++mask) {
    SicOrdering ordering;
    ordering.alpha_b.assign(K, 0.0);
    ordering.alpha_a.assign(K, 0.0);
    for (int i = 0; i < K; ++i) {
      if (mask & (1L << i)) {
        ordering.alpha_a[i] = 1.0;
      } else {
        ordering.alpha_b[i] = 1.0;
      }
    }
    P3Anchor anchor;
    anchor.p_tr_anchor.resize(K);
    for (int i = 0; i < K; ++i) {
      anchor.p_tr_anchor[i] = cfg.eh_efficiency * cfg.pt_power * gains.a[i];
    }
    const detail::ScaResult sca = detail::run_sca(cfg, gains, ordering, anchor, nullptr);
    ++out.evaluated;
    if (!sca.feasible) continue;
    FixedSicSolution cand;
    cand.solver_iterations = sca.solver_iterations;
    cand.feasible = true;
    cand.converged = sca.converged;
    const detail::Recovered rec = detail::recover_allocation(sca.x, cfg);
    cand.vars = rec.vars;
    cand.q = rec.q;
    cand.z = rec.z;
    cand.total_su_rate = total_su_rate(cand.vars, ordering, gains, cfg);
    cand.pt_rate_gain = pt_rate_gain(cand.vars, ordering, gains, cfg);
    cand.sca_trace.reserve(sca.trace_scaled.size());
    for (double v : sca.trace_scaled) cand.sca_trace.push_back(v * cfg.bandwidth);
    if (cand.total_su_rate > best) {
      best = cand.total_su_rate;
      out.best = cand;
      out.ordering = ordering;
      out.rate = cand.total_su_rate;
      out.feasible = true;
    }
  }
  return out;
}

bool SlackReport::pass(double rel_tol) const {
  for (const auto& e : entries) {
    if (e.slack < -rel_tol * e.scale) return false;
  }
  return true;
}

double SlackReport::worst_relative() const {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& e : entries) {
    worst = std::min(worst, e.slack / e.scale);
  }
  return worst;
}

SlackReport audit_solution(const AllocationVars& vars, const SicOrdering& ordering,
                           const ScenarioConfig& cfg, const ChannelGains& gains) {
  cfg.validate();
  const int K = cfg.num_sus;
  const double T = cfg.block_duration;
  SlackReport rep;
  auto add = [&rep](std::string name, double slack, double scale) {
    rep.entries.push_back({std::move(name), slack, std::max(scale, 1e-12)});
  };

  add("rate_gain", pt_rate_gain(vars, ordering, gains, cfg) - cfg.min_pt_gain,
      std::max(1.0, cfg.min_pt_gain));

  // energy causality from the raw definitions (harvest windows, reflected
  // share, recycling), independent of the transformed solver variables
  for (int i = 0; i < K; ++i) {
    const double q_i = vars.beta[i] * vars.tau[i];
    double harvested = cfg.eh_efficiency * cfg.pt_power * gains.a[i] *
                       (vars.T_a + vars.T_b - vars.t[i] - q_i);
    for (int j = 0; j < K; ++j) {
      if (j == i) continue;
      harvested += cfg.eh_efficiency * gains.f[i][j] *
                   (cfg.pt_power * gains.a[j] * vars.beta[j] * vars.tau[j] +
                    vars.p_tr[j] * vars.t[j]);
    }
    const double consumed = cfg.bc_circuit_power * vars.tau[i] +
                            cfg.ac_circuit_power * vars.t[i] + vars.p_tr[i] * vars.t[i];
    add("energy_su" + std::to_string(i), harvested - consumed,
        std::max(harvested + consumed, 1e-12));
  }

  double sum_tau = 0.0, sum_t = 0.0;
  for (int i = 0; i < K; ++i) {
    sum_tau += vars.tau[i];
    sum_t += vars.t[i];
    add("tau_su" + std::to_string(i), vars.tau[i], T);
    add("t_su" + std::to_string(i), vars.t[i], T);
    add("beta_su" + std::to_string(i), std::min(vars.beta[i], 1.0 - vars.beta[i]), 1.0);
    add("p_tr_su" + std::to_string(i), vars.p_tr[i], std::max(1.0, vars.p_tr[i]));
  }
  add("bc_packing", vars.T_b - sum_tau, T);
  add("ac_packing", vars.T_a - sum_t, T);
  add("block_budget", T - (vars.T_a + vars.T_b), T);
  return rep;
}

}  // namespace srhapc
