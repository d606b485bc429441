#include "program_builder.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace srhapc::detail {

double noise_var(const ScenarioConfig& cfg) {
  return noise_power(cfg.noise_psd, cfg.bandwidth);
}

double ref_spectral(const ChannelGains& gains, const ScenarioConfig& cfg) {
  return std::log2(1.0 + cfg.pt_power * gains.b / noise_var(cfg));
}

double ac_pt_spectral(double p_tr, int i, const ChannelGains& gains, const ScenarioConfig& cfg) {
  const double s2 = noise_var(cfg);
  return std::log2(1.0 + cfg.pt_power * gains.b / (p_tr * gains.d[i] + s2));
}

double ac_pt_spectral_prime(double p_tr, int i, const ChannelGains& gains,
                            const ScenarioConfig& cfg) {
  const double s2 = noise_var(cfg);
  const double pb = cfg.pt_power * gains.b;
  const double den = p_tr * gains.d[i] + s2;
  return -pb * gains.d[i] / (M_LN2 * (den + pb) * den);
}

namespace {

struct Coefs {
  Layout L;
  double sigma2 = 0.0;
  double r0 = 0.0;                    // reference spectral efficiency
  std::vector<double> g_su;           // N P a d / sigma^2 (BC SU perspective)
  std::vector<double> g_ac_pt_first;  // d / sigma^2
  std::vector<double> g_ac_su_first;  // d / (P b + sigma^2)
  std::vector<double> g_phi;          // a d (scatter gain per unit beta)
  std::vector<double> wb, wa;         // per-slot decode weights
  std::vector<double> lin_t;          // rate-row coefficient of t_i
  std::vector<double> lin_z;          // rate-row coefficient of z_i
  double delta_scaled = 0.0;          // Delta / W
  std::shared_ptr<const ExpectedLogGrid> grid;
};

Coefs make_coefs(const ScenarioConfig& cfg, const ChannelGains& gains,
                 const SicOrdering& ordering, const P3Anchor& anchor) {
  const int K = cfg.num_sus;
  if (static_cast<int>(anchor.p_tr_anchor.size()) != K) {
    throw std::invalid_argument("anchor: needs one linearization point per SU");
  }
  for (double p : anchor.p_tr_anchor) {
    if (!std::isfinite(p) || p < 0.0) {
      throw std::invalid_argument("anchor: linearization points must be finite and nonnegative");
    }
  }
  if (static_cast<int>(ordering.alpha_b.size()) != K ||
      static_cast<int>(ordering.alpha_a.size()) != K) {
    throw std::invalid_argument("ordering: per-SU vectors must have num_sus entries");
  }
  Coefs c;
  c.L.K = K;
  c.sigma2 = noise_var(cfg);
  c.r0 = ref_spectral(gains, cfg);
  const double pb = cfg.pt_power * gains.b;
  c.g_su.resize(K);
  c.g_ac_pt_first.resize(K);
  c.g_ac_su_first.resize(K);
  c.g_phi.resize(K);
  c.lin_t.resize(K);
  c.lin_z.resize(K);
  c.wb = ordering.alpha_b;
  c.wa = ordering.alpha_a;
  for (int i = 0; i < K; ++i) {
    const double ad = gains.a[i] * gains.d[i];
    c.g_su[i] = cfg.spreading_factor * cfg.pt_power * ad / c.sigma2;
    c.g_ac_pt_first[i] = gains.d[i] / c.sigma2;
    c.g_ac_su_first[i] = gains.d[i] / (pb + c.sigma2);
    c.g_phi[i] = ad;
    // Rate-gain row, AC share: decode-PT-first slots contribute the Taylor
    // bound of the interference-limited PT term; decode-SU-first slots
    // cancel the reference exactly.
    const double pl = anchor.p_tr_anchor[i];
    const double f0 = ac_pt_spectral(pl, i, gains, cfg);
    const double f1 = ac_pt_spectral_prime(pl, i, gains, cfg);
    c.lin_t[i] = -c.r0 + c.wb[i] * (f0 - f1 * pl) + c.wa[i] * c.r0;
    c.lin_z[i] = c.wb[i] * f1;
  }
  c.delta_scaled = cfg.min_pt_gain / cfg.bandwidth;
  c.grid = quadrature_grid(cfg.quadrature_order);
  return c;
}

}  // namespace

cvx::SmoothConcaveProgram build_allocation_program(const ScenarioConfig& cfg,
                                                   const ChannelGains& gains,
                                                   const SicOrdering& ordering,
                                                   const P3Anchor& anchor) {
  cfg.validate();
  const auto c = std::make_shared<const Coefs>(make_coefs(cfg, gains, ordering, anchor));
  const Layout L = c->L;
  const int K = L.K;
  const int n = L.n();
  const double T = cfg.block_duration;
  const double eta = cfg.eh_efficiency;
  const double P = cfg.pt_power;
  const double inv_N = 1.0 / cfg.spreading_factor;
  const double bq = gains.b;
  const double sigma2 = c->sigma2;

  cvx::SmoothConcaveProgram prog;
  prog.n_vars = n;
  prog.lower = Eigen::VectorXd::Zero(n);
  prog.upper = Eigen::VectorXd::Constant(n, T);
  for (int i = 0; i < K; ++i) {
    prog.upper[L.z(i)] = 1e3 * (eta * P * gains.a[i] * T + 1.0);  // boundedness guard
  }

  // beta <= 1
  for (int i = 0; i < K; ++i) {
    cvx::LinearRow r;
    r.coeffs = Eigen::VectorXd::Zero(n);
    r.coeffs[L.q(i)] = 1.0;
    r.coeffs[L.tau(i)] = -1.0;
    r.rhs = 0.0;
    prog.linear_constraints.push_back(std::move(r));
  }
  // slot packing and block budget
  {
    cvx::LinearRow r;
    r.coeffs = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < K; ++i) r.coeffs[L.tau(i)] = 1.0;
    r.coeffs[L.Tb()] = -1.0;
    prog.linear_constraints.push_back(std::move(r));
  }
  {
    cvx::LinearRow r;
    r.coeffs = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < K; ++i) r.coeffs[L.t(i)] = 1.0;
    r.coeffs[L.Ta()] = -1.0;
    prog.linear_constraints.push_back(std::move(r));
  }
  {
    cvx::LinearRow r;
    r.coeffs = Eigen::VectorXd::Zero(n);
    r.coeffs[L.Ta()] = 1.0;
    r.coeffs[L.Tb()] = 1.0;
    r.rhs = T;
    prog.linear_constraints.push_back(std::move(r));
  }
  // per-SU energy causality: consumption - harvest <= 0
  for (int i = 0; i < K; ++i) {
    cvx::LinearRow r;
    r.coeffs = Eigen::VectorXd::Zero(n);
    r.coeffs[L.tau(i)] = cfg.bc_circuit_power;
    r.coeffs[L.t(i)] = eta * P * gains.a[i] + cfg.ac_circuit_power;
    r.coeffs[L.q(i)] = eta * P * gains.a[i];
    r.coeffs[L.z(i)] = 1.0;
    r.coeffs[L.Ta()] = -eta * P * gains.a[i];
    r.coeffs[L.Tb()] = -eta * P * gains.a[i];
    for (int j = 0; j < K; ++j) {
      if (j == i) continue;
      r.coeffs[L.q(j)] = -eta * P * gains.a[j] * gains.f[i][j];
      r.coeffs[L.z(j)] = -eta * gains.f[i][j];
    }
    r.rhs = 0.0;
    prog.linear_constraints.push_back(std::move(r));
  }

  // objective: total SU rate / W (exact in the transformed variables)
  prog.objective = [c, inv_N](const Eigen::VectorXd& x) {
    const Layout& L = c->L;
    cvx::SmoothEval out;
    out.grad = Eigen::VectorXd::Zero(x.size());
    for (int i = 0; i < L.K; ++i) {
      double dt, dq;
      out.value += inv_N * cvx::perspective::value(c->g_su[i], x[L.tau(i)], x[L.q(i)]);
      cvx::perspective::derivatives(c->g_su[i], x[L.tau(i)], x[L.q(i)], dt, dq);
      out.grad[L.tau(i)] += inv_N * dt;
      out.grad[L.q(i)] += inv_N * dq;
      if (c->wb[i] != 0.0) {
        out.value += c->wb[i] * cvx::perspective::value(c->g_ac_pt_first[i], x[L.t(i)], x[L.z(i)]);
        cvx::perspective::derivatives(c->g_ac_pt_first[i], x[L.t(i)], x[L.z(i)], dt, dq);
        out.grad[L.t(i)] += c->wb[i] * dt;
        out.grad[L.z(i)] += c->wb[i] * dq;
      }
      if (c->wa[i] != 0.0) {
        out.value += c->wa[i] * cvx::perspective::value(c->g_ac_su_first[i], x[L.t(i)], x[L.z(i)]);
        cvx::perspective::derivatives(c->g_ac_su_first[i], x[L.t(i)], x[L.z(i)], dt, dq);
        out.grad[L.t(i)] += c->wa[i] * dt;
        out.grad[L.z(i)] += c->wa[i] * dq;
      }
    }
    return out;
  };
  prog.objective_hess = [c, inv_N](const Eigen::VectorXd& x) {
    const Layout& L = c->L;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(x.size(), x.size());
    for (int i = 0; i < L.K; ++i) {
      double htt, htq, hqq;
      cvx::perspective::hessian(c->g_su[i], x[L.tau(i)], x[L.q(i)], htt, htq, hqq);
      H(L.tau(i), L.tau(i)) += inv_N * htt;
      H(L.tau(i), L.q(i)) += inv_N * htq;
      H(L.q(i), L.tau(i)) += inv_N * htq;
      H(L.q(i), L.q(i)) += inv_N * hqq;
      if (c->wb[i] != 0.0) {
        cvx::perspective::hessian(c->g_ac_pt_first[i], x[L.t(i)], x[L.z(i)], htt, htq, hqq);
        H(L.t(i), L.t(i)) += c->wb[i] * htt;
        H(L.t(i), L.z(i)) += c->wb[i] * htq;
        H(L.z(i), L.t(i)) += c->wb[i] * htq;
        H(L.z(i), L.z(i)) += c->wb[i] * hqq;
      }
      if (c->wa[i] != 0.0) {
        cvx::perspective::hessian(c->g_ac_su_first[i], x[L.t(i)], x[L.z(i)], htt, htq, hqq);
        H(L.t(i), L.t(i)) += c->wa[i] * htt;
        H(L.t(i), L.z(i)) += c->wa[i] * htq;
        H(L.z(i), L.t(i)) += c->wa[i] * htq;
        H(L.z(i), L.z(i)) += c->wa[i] * hqq;
      }
    }
    return H;
  };

  // rate-gain row: quadrature perspectives in (tau, q) plus the linear
  // AC/reference share, minus Delta/W
  prog.smooth_constraints.push_back(cvx::SmoothConstraint{
      [c, P, bq, sigma2](const Eigen::VectorXd& x) {
        const Layout& L = c->L;
        cvx::SmoothEval out;
        out.grad = Eigen::VectorXd::Zero(x.size());
        out.value = -c->delta_scaled;
        for (int i = 0; i < L.K; ++i) {
          const double tau = x[L.tau(i)];
          if (tau > cvx::perspective::kTauFloor) {
            const double s = c->g_phi[i] * x[L.q(i)] / tau;
            const auto e = c->grid->eval(bq, s, P, sigma2);
            out.value += tau * e.value;
            out.grad[L.tau(i)] += e.value - s * e.d1;
            out.grad[L.q(i)] += c->g_phi[i] * e.d1;
          }
          out.value += -c->r0 * tau + c->lin_t[i] * x[L.t(i)] + c->lin_z[i] * x[L.z(i)];
          out.grad[L.tau(i)] += -c->r0;
          out.grad[L.t(i)] += c->lin_t[i];
          out.grad[L.z(i)] += c->lin_z[i];
        }
        return out;
      },
      [c, P, bq, sigma2](const Eigen::VectorXd& x) {
        const Layout& L = c->L;
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(x.size(), x.size());
        for (int i = 0; i < L.K; ++i) {
          const double tau = x[L.tau(i)];
          if (tau <= cvx::perspective::kTauFloor) continue;
          const double G = c->g_phi[i];
          const double s = G * x[L.q(i)] / tau;
          const auto e = c->grid->eval(bq, s, P, sigma2);
          H(L.tau(i), L.tau(i)) = s * s * e.d2 / tau;
          H(L.tau(i), L.q(i)) = -G * s * e.d2 / tau;
          H(L.q(i), L.tau(i)) = H(L.tau(i), L.q(i));
          H(L.q(i), L.q(i)) = G * G * e.d2 / tau;
        }
        return H;
      }});

  // cheap interior hint; phase one covers the cases where it misses
  Eigen::VectorXd hint = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < K; ++i) {
    hint[L.tau(i)] = 0.2 * T / K;
    hint[L.t(i)] = 0.01 * T / K;
    hint[L.q(i)] = 0.8 * hint[L.tau(i)];
    hint[L.z(i)] = 1e-6;
  }
  hint[L.Ta()] = 0.3 * T;
  hint[L.Tb()] = 0.4 * T;
  prog.strict_interior_point = hint;
  return prog;
}

Recovered recover_allocation(const Eigen::VectorXd& x, const ScenarioConfig& cfg) {
  Layout L;
  L.K = cfg.num_sus;
  if (x.size() != L.n()) throw std::invalid_argument("recover: point dimension mismatch");
  Recovered r;
  r.vars = AllocationVars::zeros(L.K);
  r.q.resize(L.K);
  r.z.resize(L.K);
  for (int i = 0; i < L.K; ++i) {
    const double tau = std::max(0.0, x[L.tau(i)]);
    const double t = std::max(0.0, x[L.t(i)]);
    const double q = std::max(0.0, x[L.q(i)]);
    const double z = std::max(0.0, x[L.z(i)]);
    r.vars.tau[i] = tau;
    r.vars.t[i] = t;
    r.vars.beta[i] = (tau > cvx::perspective::kTauFloor) ? std::min(1.0, q / tau) : 0.0;
    r.vars.p_tr[i] = (t >= 1e-9) ? z / t : 0.0;
    r.q[i] = q;
    r.z[i] = z;
  }
  r.vars.T_a = std::max(0.0, x[L.Ta()]);
  r.vars.T_b = std::max(0.0, x[L.Tb()]);
  return r;
}

namespace {

double scaled_gain_common(const Eigen::VectorXd& x, const ScenarioConfig& cfg,
                          const ChannelGains& gains, const SicOrdering& ordering,
                          const P3Anchor* anchor) {
  Layout L;
  L.K = cfg.num_sus;
  if (x.size() != L.n()) throw std::invalid_argument("gain: point dimension mismatch");
  const double sigma2 = noise_var(cfg);
  const double r0 = ref_spectral(gains, cfg);
  const auto grid = quadrature_grid(cfg.quadrature_order);
  double gain = -cfg.min_pt_gain / cfg.bandwidth;
  for (int i = 0; i < L.K; ++i) {
    const double tau = x[L.tau(i)];
    const double t = x[L.t(i)];
    const double z = x[L.z(i)];
    if (tau > cvx::perspective::kTauFloor) {
      const double s = gains.a[i] * gains.d[i] * x[L.q(i)] / tau;
      gain += tau * grid->value(gains.b, s, cfg.pt_power, sigma2);
    }
    gain += -r0 * tau - r0 * t;
    const double wb = ordering.alpha_b[i];
    const double wa = ordering.alpha_a[i];
    if (wb != 0.0) {
      if (anchor) {
        const double pl = anchor->p_tr_anchor[i];
        const double f0 = ac_pt_spectral(pl, i, gains, cfg);
        const double f1 = ac_pt_spectral_prime(pl, i, gains, cfg);
        gain += wb * (t * (f0 - f1 * pl) + f1 * z);
      } else {
        const double p = (t >= 1e-9) ? z / t : 0.0;
        gain += wb * t * ac_pt_spectral(p, i, gains, cfg);
      }
    }
    if (wa != 0.0) gain += wa * t * r0;
  }
  return gain;
}

}  // namespace

double scaled_gain_exact(const Eigen::VectorXd& x, const ScenarioConfig& cfg,
                         const ChannelGains& gains, const SicOrdering& ordering) {
  return scaled_gain_common(x, cfg, gains, ordering, nullptr);
}

double scaled_gain_linearized(const Eigen::VectorXd& x, const ScenarioConfig& cfg,
                              const ChannelGains& gains, const SicOrdering& ordering,
                              const P3Anchor& anchor) {
  return scaled_gain_common(x, cfg, gains, ordering, &anchor);
}

ScaResult run_sca(const ScenarioConfig& cfg, const ChannelGains& gains,
                  const SicOrdering& ordering, const P3Anchor& init_anchor,
                  const Eigen::VectorXd* warm_start) {
  ScaResult res;
  res.anchor = init_anchor;
  double incumbent = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd x;
  bool have_x = warm_start != nullptr;
  if (have_x) x = *warm_start;

  cvx::SolveOptions sopts;
  sopts.tol = cfg.solver.tol;
  sopts.max_newton = cfg.solver.max_newton;
  sopts.barrier_mult = cfg.solver.barrier_mult;

  for (int iter = 0; iter < cfg.sca.max_iters; ++iter) {
    cvx::SmoothConcaveProgram prog = build_allocation_program(cfg, gains, ordering, res.anchor);
    if (have_x) prog.strict_interior_point = x;
    const cvx::Solution sol = cvx::solve(prog, sopts);
    res.solver_iterations += sol.iterations;
    if (sol.status == cvx::SolveStatus::Infeasible) {
      if (!res.feasible) return res;  // infeasible from the start
      break;  // should not happen on a warm start; keep the incumbent
    }
    if (sol.status == cvx::SolveStatus::NumericalFailure) break;
    if (res.feasible && sol.objective_value < incumbent) {
      // Re-solving at the new anchor can only enlarge the feasible set at
      // the incumbent; a worse value means solver noise. Keep the incumbent.
      res.converged = true;
      break;
    }
    const double prev = incumbent;
    incumbent = sol.objective_value;
    x = sol.x;
    have_x = true;
    res.feasible = true;
    res.trace_scaled.push_back(incumbent);
    res.gain_slack_trace.push_back(scaled_gain_exact(x, cfg, gains, ordering));
    // re-anchor at the transmit powers of the new point
    const Recovered rec = recover_allocation(x, cfg);
    res.anchor.p_tr_anchor = rec.vars.p_tr;
    double norm_sq = 0.0;
    for (double p : res.anchor.p_tr_anchor) norm_sq += p * p;
    res.anchor_norm_trace.push_back(std::sqrt(norm_sq));
    if (std::isfinite(prev)) {
      const double rel = std::abs(incumbent - prev) / std::max(1.0, std::abs(incumbent));
      if (rel < cfg.sca.tol) {
        res.converged = true;
        break;
      }
    }
  }
  res.x = x;
  return res;
}

}  // namespace srhapc::detail
