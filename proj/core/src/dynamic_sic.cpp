#include "srhapc/dynamic_sic.hpp"

#include "program_builder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace srhapc {
namespace {

void check_fix(const ScenarioConfig& cfg, const ContinuousFix& fix) {
  const auto K = static_cast<std::size_t>(cfg.num_sus);
  if (fix.tau.size() != K || fix.t.size() != K || fix.mu.size() != K || fix.chi.size() != K ||
      fix.anchor.p_tr_anchor.size() != K) {
    throw std::invalid_argument("continuous fix: per-SU vectors must have num_sus entries");
  }
  auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
  for (std::size_t i = 0; i < K; ++i) {
    if (!ok(fix.tau[i]) || !ok(fix.t[i]) || !ok(fix.mu[i]) || !ok(fix.chi[i]) ||
        !ok(fix.anchor.p_tr_anchor[i])) {
      throw std::invalid_argument("continuous fix: entries must be finite and nonnegative");
    }
  }
  if (!ok(fix.T_a) || !ok(fix.T_b)) {
    throw std::invalid_argument("continuous fix: sub-block durations must be finite and nonnegative");
  }
}

/// Net rate gain of a committed or relaxed ordering at the frozen point:
/// every slot pays the reference W t r0; a decode-PT-first share recovers the
/// linearized active PT rate and a decode-SU-first share recovers the
/// reference exactly.
double row_gain(const FrozenRates& fr, const std::vector<double>& ab,
                const std::vector<double>& aa) {
  double g = 0.0;
  for (std::size_t i = 0; i < fr.gain_bc.size(); ++i) {
    g += fr.gain_bc[i] + ab[i] * fr.gain_ac_pt_first[i] + (ab[i] + aa[i] - 1.0) * fr.ref_ac[i];
  }
  return g;
}

double su_total_frozen(const FrozenRates& fr, const std::vector<double>& ab,
                       const std::vector<double>& aa) {
  double r = 0.0;
  for (std::size_t i = 0; i < fr.su_bc.size(); ++i) {
    r += fr.su_bc[i] + ab[i] * fr.su_ac_pt_first[i] + aa[i] * fr.su_ac_su_first[i];
  }
  return r;
}

}  // namespace

cvx::SmoothConcaveProgram assemble_p411(const ScenarioConfig& cfg, const ChannelGains& gains,
                                        const SicOrdering& ordering, const P3Anchor& anchor) {
  if (!ordering.committed()) {
    throw std::invalid_argument("assemble_p411: ordering must be committed (binary)");
  }
  return detail::build_allocation_program(cfg, gains, ordering, anchor);
}

double penalty_upper_bound(const SicOrdering& alpha, const SicOrdering& anchor) {
  if (alpha.alpha_b.size() != anchor.alpha_b.size() ||
      alpha.alpha_a.size() != anchor.alpha_a.size() ||
      alpha.alpha_b.size() != alpha.alpha_a.size()) {
    throw std::invalid_argument("penalty_upper_bound: mismatched alpha vectors");
  }
  auto term = [](double a, double r) { return a - r * r - 2.0 * r * (a - r); };
  double m = 0.0;
  for (std::size_t i = 0; i < alpha.alpha_b.size(); ++i) {
    m += term(alpha.alpha_b[i], anchor.alpha_b[i]);
    m += term(alpha.alpha_a[i], anchor.alpha_a[i]);
  }
  return m;
}

FrozenRates frozen_rates(const ScenarioConfig& cfg, const ChannelGains& gains,
                         const ContinuousFix& fix) {
  cfg.validate();
  check_fix(cfg, fix);
  const int K = cfg.num_sus;
  const double W = cfg.bandwidth;
  const double inv_N = 1.0 / cfg.spreading_factor;
  const double sigma2 = detail::noise_var(cfg);
  const double r0 = detail::ref_spectral(gains, cfg);
  const double pb = cfg.pt_power * gains.b;
  const auto grid = quadrature_grid(cfg.quadrature_order);

  FrozenRates fr;
  fr.su_bc.resize(K);
  fr.su_ac_pt_first.resize(K);
  fr.su_ac_su_first.resize(K);
  fr.gain_bc.resize(K);
  fr.gain_ac_pt_first.resize(K);
  fr.ref_ac.resize(K);
  for (int i = 0; i < K; ++i) {
    const double tau = fix.tau[i];
    const double t = fix.t[i];
    const double ad = gains.a[i] * gains.d[i];
    const double g_su = cfg.spreading_factor * cfg.pt_power * ad / sigma2;
    fr.su_bc[i] = W * inv_N * cvx::perspective::value(g_su, tau, fix.mu[i]);
    fr.su_ac_pt_first[i] = W * cvx::perspective::value(gains.d[i] / sigma2, t, fix.chi[i]);
    fr.su_ac_su_first[i] = W * cvx::perspective::value(gains.d[i] / (pb + sigma2), t, fix.chi[i]);
    double phi = 0.0;
    if (tau > cvx::perspective::kTauFloor) {
      phi = tau * grid->value(gains.b, ad * fix.mu[i] / tau, cfg.pt_power, sigma2);
    }
    fr.gain_bc[i] = W * (phi - r0 * tau);
    const double pl = fix.anchor.p_tr_anchor[i];
    const double f0 = detail::ac_pt_spectral(pl, i, gains, cfg);
    const double f1 = detail::ac_pt_spectral_prime(pl, i, gains, cfg);
    fr.gain_ac_pt_first[i] = W * (t * (f0 - f1 * pl) + f1 * fix.chi[i] - t * r0);
    fr.ref_ac[i] = W * t * r0;
  }
  return fr;
}

cvx::SmoothConcaveProgram assemble_p423(const ScenarioConfig& cfg, const ChannelGains& gains,
                                        const ContinuousFix& fix, const PenaltyState& state) {
  const int K = cfg.num_sus;
  if (!(std::isfinite(state.zeta) && state.zeta > 0.0)) {
    throw std::invalid_argument("penalty state: zeta must be positive");
  }
  if (static_cast<int>(state.anchor_b.size()) != K ||
      static_cast<int>(state.anchor_a.size()) != K) {
    throw std::invalid_argument("penalty state: anchors must have num_sus entries");
  }
  for (int i = 0; i < K; ++i) {
    if (!(state.anchor_b[i] >= 0.0 && state.anchor_b[i] <= 1.0 && state.anchor_a[i] >= 0.0 &&
          state.anchor_a[i] <= 1.0)) {
      throw std::invalid_argument("penalty state: anchors must lie in [0, 1]");
    }
  }
  const FrozenRates fr = frozen_rates(cfg, gains, fix);
  const double W = cfg.bandwidth;
  const int n = 2 * K;  // [alpha_b_0.., alpha_a_0..]

  cvx::SmoothConcaveProgram prog;
  prog.n_vars = n;
  prog.lower = Eigen::VectorXd::Zero(n);
  prog.upper = Eigen::VectorXd::Ones(n);
  for (int i = 0; i < K; ++i) {
    cvx::LinearRow r;
    r.coeffs = Eigen::VectorXd::Zero(n);
    r.coeffs[i] = 1.0;
    r.coeffs[K + i] = 1.0;
    r.rhs = 1.0;
    prog.linear_constraints.push_back(std::move(r));
  }
  // rate-gain row at the frozen point, scaled by 1/W
  {
    cvx::LinearRow r;
    r.coeffs = Eigen::VectorXd::Zero(n);
    double base = 0.0;  // gain with every slot idle
    for (int i = 0; i < K; ++i) {
      r.coeffs[i] = -(fr.gain_ac_pt_first[i] + fr.ref_ac[i]) / W;
      r.coeffs[K + i] = -fr.ref_ac[i] / W;
      base += fr.gain_bc[i] - fr.ref_ac[i];
    }
    r.rhs = -(cfg.min_pt_gain - base) / W;
    prog.linear_constraints.push_back(std::move(r));
  }

  // linear objective: frozen SU rate minus the penalty upper bound, both /W.
  // M(alpha) is linear at the anchor: sum over slots of alpha (1 - 2r) + r^2.
  Eigen::VectorXd coef(n);
  double constant = 0.0;
  for (int i = 0; i < K; ++i) {
    coef[i] = (fr.su_ac_pt_first[i] - state.zeta * (1.0 - 2.0 * state.anchor_b[i])) / W;
    coef[K + i] = (fr.su_ac_su_first[i] - state.zeta * (1.0 - 2.0 * state.anchor_a[i])) / W;
    constant += fr.su_bc[i] / W;
    constant -= state.zeta *
                (state.anchor_b[i] * state.anchor_b[i] + state.anchor_a[i] * state.anchor_a[i]) /
                W;
  }
  prog.objective = [coef, constant](const Eigen::VectorXd& x) {
    cvx::SmoothEval out;
    out.value = constant + coef.dot(x);
    out.grad = coef;
    return out;
  };
  prog.objective_hess = [n](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(n, n); };
  prog.strict_interior_point = Eigen::VectorXd::Constant(n, 0.25);
  return prog;
}

SicOrdering sic_penalty_loop(const ScenarioConfig& cfg, const ChannelGains& gains,
                             const ContinuousFix& fix, PenaltyLoopDiag* diag) {
  cfg.validate();
  check_fix(cfg, fix);
  const int K = cfg.num_sus;
  PenaltyLoopDiag local;
  PenaltyLoopDiag& d = diag ? *diag : local;
  d = PenaltyLoopDiag{};

  const FrozenRates fr = frozen_rates(cfg, gains, fix);
  const double delta = cfg.min_pt_gain;
  const double feas_tol = 1e-6 * std::max(1.0, delta);

  // Best achievable gain over the relaxation: decode-SU-first recovers the
  // reference exactly, so each slot's net active contribution tops out at 0
  // (the linearized PT-first term never beats the clean reference).
  double best_gain = 0.0;
  for (int i = 0; i < K; ++i) {
    best_gain += fr.gain_bc[i] + std::max(fr.gain_ac_pt_first[i], 0.0);
  }
  if (best_gain < delta - feas_tol) {
    d.feasible = false;
    return SicOrdering::all_pt_first(K);
  }

  double rate_mag = 0.0;
  for (int i = 0; i < K; ++i) {
    rate_mag += fr.su_bc[i] + std::max(fr.su_ac_pt_first[i], fr.su_ac_su_first[i]);
  }
  PenaltyState state;
  state.zeta = 10.0 * std::max(1.0, rate_mag);
  state.anchor_b.assign(K, 0.5);
  state.anchor_a.assign(K, 0.5);

  cvx::SolveOptions sopts;
  sopts.tol = cfg.solver.tol;
  sopts.max_newton = cfg.solver.max_newton;
  sopts.barrier_mult = cfg.solver.barrier_mult;

  std::vector<double> ab(K, 0.5), aa(K, 0.5);
  int zeta_rounds = 0;
  constexpr int kMaxIters = 60;
  for (int iter = 0; iter < kMaxIters; ++iter) {
    const cvx::SmoothConcaveProgram prog = assemble_p423(cfg, gains, fix, state);
    const cvx::Solution sol = cvx::solve(prog, sopts);
    ++d.iterations;
    d.final_zeta = state.zeta;
    if (sol.status == cvx::SolveStatus::Infeasible) {
      // the LP relaxes every ordering, so no binary ordering can work either
      d.feasible = false;
      return SicOrdering::all_pt_first(K);
    }
    if (sol.status == cvx::SolveStatus::NumericalFailure) break;
    double moved = 0.0;
    double gap = 0.0;
    for (int i = 0; i < K; ++i) {
      const double b = std::clamp(sol.x[i], 0.0, 1.0);
      const double a = std::clamp(sol.x[K + i], 0.0, 1.0);
      moved = std::max({moved, std::abs(b - ab[i]), std::abs(a - aa[i])});
      ab[i] = b;
      aa[i] = a;
      gap = std::max({gap, b - b * b, a - a * a});
    }
    d.binary_gaps.push_back(gap);
    d.final_gap = gap;
    state.anchor_b = ab;
    state.anchor_a = aa;
    if (moved < 1e-6) {
      if (gap > cfg.bcd.binary_gap_tol && zeta_rounds < cfg.bcd.zeta_growth_rounds) {
        state.zeta *= cfg.bcd.zeta_mult;
        ++zeta_rounds;
        continue;
      }
      break;
    }
  }

  // round: drop slots with little decode mass, otherwise pick the larger
  // share with a decode-PT-first tie-break (it dominates the SU rate)
  SicOrdering rounded;
  rounded.alpha_b.assign(K, 0.0);
  rounded.alpha_a.assign(K, 0.0);
  for (int i = 0; i < K; ++i) {
    if (ab[i] + aa[i] < 0.5) {
      if (fix.t[i] > 1e-9) rounded.alpha_b[i] = 1.0;  // live slot must be decoded
    } else if (ab[i] >= aa[i]) {
      rounded.alpha_b[i] = 1.0;
    } else {
      rounded.alpha_a[i] = 1.0;
    }
  }
  if (row_gain(fr, rounded.alpha_b, rounded.alpha_a) >= delta - feas_tol) {
    return rounded;
  }

  if (K <= 8) {
    // exhaustive sweep of the 3^K committed orderings, best frozen SU rate
    d.used_enumeration = true;
    long combos = 1;
    for (int i = 0; i < K; ++i) combos *= 3;
    double best_rate = -std::numeric_limits<double>::infinity();
    SicOrdering best;
    bool found = false;
    for (long code = 0; code < combos; ++code) {
      SicOrdering cand;
      cand.alpha_b.assign(K, 0.0);
      cand.alpha_a.assign(K, 0.0);
      long rem = code;
      for (int i = 0; i < K; ++i) {
        const int opt = static_cast<int>(rem % 3);
        rem /= 3;
        if (opt == 0) cand.alpha_b[i] = 1.0;
        if (opt == 1) cand.alpha_a[i] = 1.0;
      }
      if (row_gain(fr, cand.alpha_b, cand.alpha_a) < delta - feas_tol) continue;
      const double rate = su_total_frozen(fr, cand.alpha_b, cand.alpha_a);
      if (rate > best_rate) {  // ties keep the earlier (decode-PT-first-leaning) code
        best_rate = rate;
        best = cand;
        found = true;
      }
    }
    if (found) return best;
  } else {
    // all-SU-first maximizes the frozen gain; use it when the rounded pick misses
    const SicOrdering su_first = SicOrdering::all_su_first(K);
    if (row_gain(fr, su_first.alpha_b, su_first.alpha_a) >= delta - feas_tol) return su_first;
  }
  d.feasible = false;
  return SicOrdering::all_pt_first(K);
}

DynamicSicSolution algorithm2(const ScenarioConfig& cfg, const ChannelGains& gains) {
  cfg.validate();
  const int K = cfg.num_sus;
  const double W = cfg.bandwidth;

  DynamicSicSolution out;
  out.vars = AllocationVars::zeros(K);
  out.mu.assign(K, 0.0);
  out.chi.assign(K, 0.0);
  out.ordering = SicOrdering::all_pt_first(K);

  SicOrdering ordering = SicOrdering::all_pt_first(K);
  P3Anchor anchor;
  anchor.p_tr_anchor.resize(K);
  for (int i = 0; i < K; ++i) {
    anchor.p_tr_anchor[i] = cfg.eh_efficiency * cfg.pt_power * gains.a[i];
  }

  double best_value = -std::numeric_limits<double>::infinity();  // scaled SU rate
  Eigen::VectorXd best_x;
  SicOrdering best_ordering = ordering;
  Eigen::VectorXd warm;
  bool have_warm = false;

  for (int outer = 0; outer < cfg.bcd.max_outer; ++outer) {
    const detail::ScaResult sca =
        detail::run_sca(cfg, gains, ordering, anchor, have_warm ? &warm : nullptr);
    out.solver_iterations += sca.solver_iterations;
    if (!sca.feasible) {
      if (outer == 0) return out;  // out.feasible stays false
      break;                       // keep the incumbent
    }
    std::vector<double> trace_bits(sca.trace_scaled.size());
    for (std::size_t k = 0; k < sca.trace_scaled.size(); ++k) {
      trace_bits[k] = W * sca.trace_scaled[k];
    }
    out.inner_traces.push_back(std::move(trace_bits));

    DynamicSicSolution::ChainCheck chk;
    chk.tightness_a = std::abs(detail::scaled_gain_exact(sca.x, cfg, gains, ordering) -
                               detail::scaled_gain_linearized(sca.x, cfg, gains, ordering,
                                                              sca.anchor));
    for (std::size_t k = 0; k + 1 < sca.trace_scaled.size(); ++k) {
      const double step = sca.trace_scaled[k + 1] - sca.trace_scaled[k];
      if (k == 0 || step < chk.inner_b) chk.inner_b = step;
    }

    // freeze the continuous block
    ContinuousFix fix;
    fix.tau.resize(K);
    fix.t.resize(K);
    fix.mu.resize(K);
    fix.chi.resize(K);
    const detail::Layout L{K};
    for (int i = 0; i < K; ++i) {
      fix.tau[i] = std::max(0.0, sca.x[L.tau(i)]);
      fix.t[i] = std::max(0.0, sca.x[L.t(i)]);
      fix.mu[i] = std::max(0.0, sca.x[L.q(i)]);
      fix.chi[i] = std::max(0.0, sca.x[L.z(i)]);
    }
    fix.T_a = std::max(0.0, sca.x[L.Ta()]);
    fix.T_b = std::max(0.0, sca.x[L.Tb()]);
    fix.anchor = sca.anchor;

    const FrozenRates fr = frozen_rates(cfg, gains, fix);
    SicOrdering adopted = ordering;
    double value = su_total_frozen(fr, ordering.alpha_b, ordering.alpha_a) / W;

    double pass_gap = 0.0, pass_zeta = 0.0;
    if (cfg.bcd.optimize_ordering) {
      PenaltyLoopDiag pd;
      const SicOrdering cand = sic_penalty_loop(cfg, gains, fix, &pd);
      pass_gap = pd.final_gap;
      pass_zeta = pd.final_zeta;
      out.final_binary_gap = pd.final_gap;
      out.used_enumeration_fallback = out.used_enumeration_fallback || pd.used_enumeration;
      if (pd.feasible) {
        const double obj_new = su_total_frozen(fr, cand.alpha_b, cand.alpha_a) / W;
        if (obj_new > value) {
          // the ordering step of the monotone chain; a candidate that scores
          // no better is discarded and the step contributes zero
          chk.ordering_c = obj_new - value;
          adopted = cand;
          value = obj_new;
        }
      }
    }
    chk.bound_d = detail::scaled_gain_exact(sca.x, cfg, gains, adopted) -
                  detail::scaled_gain_linearized(sca.x, cfg, gains, adopted, sca.anchor);
    out.chain_checks.push_back(chk);

    // The frozen-rate ordering step cannot leave a fixed point: the gain row
    // is tight there, so every frozen alternative scores no better. Rate
    // freed by another decode order only shows up after the continuous block
    // is re-solved, so a stalled loop re-checks the committed orders end to
    // end before settling; on success the refined order seeds the next pass.
    const auto refine_ordering = [&](const SicOrdering& incumbent) -> bool {
      if (!cfg.bcd.optimize_ordering || K > 6) return false;
      const double margin = 1e-6 * std::max(1.0, std::abs(best_value));
      double refined_value = best_value + margin;
      bool improved = false;
      for (long mask = 0; mask < (1L << K); ++mask) {
        SicOrdering cand;
        cand.alpha_b.assign(K, 0.0);
        cand.alpha_a.assign(K, 0.0);
        bool is_incumbent = true;
        for (int i = 0; i < K; ++i) {
          const bool su_first = (mask >> i) & 1;
          cand.alpha_b[i] = su_first ? 0.0 : 1.0;
          cand.alpha_a[i] = su_first ? 1.0 : 0.0;
          if (cand.alpha_b[i] != incumbent.alpha_b[i] ||
              cand.alpha_a[i] != incumbent.alpha_a[i]) {
            is_incumbent = false;
          }
        }
        if (is_incumbent) continue;
        const detail::ScaResult trial =
            detail::run_sca(cfg, gains, cand, anchor, have_warm ? &warm : nullptr);
        out.solver_iterations += trial.solver_iterations;
        if (!trial.feasible || trial.trace_scaled.empty()) continue;
        if (trial.trace_scaled.back() > refined_value) {
          refined_value = trial.trace_scaled.back();
          ordering = cand;
          anchor = trial.anchor;
          warm = trial.x;
          have_warm = true;
          improved = true;
        }
      }
      if (improved) ++out.ordering_refinements;
      return improved;
    };

    if (value < best_value) {  // no progress over the incumbent pass
      if (refine_ordering(best_ordering)) continue;
      break;
    }
    const double prev = best_value;
    best_value = value;
    best_x = sca.x;
    best_ordering = adopted;
    out.bcd_trace.push_back(W * value);
    out.binary_gap_trace.push_back(pass_gap);
    out.zeta_trace.push_back(pass_zeta);
    {
      const detail::Recovered rec = detail::recover_allocation(sca.x, cfg);
      out.pass_pt_gain.push_back(pt_rate_gain(rec.vars, adopted, gains, cfg));
    }
    out.feasible = true;
    if (std::isfinite(prev)) {
      const double rel = std::abs(value - prev) / std::max(1.0, std::abs(value));
      if (rel < cfg.bcd.tol) {
        if (refine_ordering(adopted)) continue;
        out.converged = true;
        break;
      }
    }
    ordering = adopted;
    anchor = sca.anchor;
    warm = sca.x;
    have_warm = true;
  }

  if (!out.feasible) return out;
  const detail::Recovered rec = detail::recover_allocation(best_x, cfg);
  out.vars = rec.vars;
  out.mu = rec.q;
  out.chi = rec.z;
  out.ordering = best_ordering;
  out.total_su_rate = total_su_rate(out.vars, out.ordering, gains, cfg);
  out.pt_rate_gain = pt_rate_gain(out.vars, out.ordering, gains, cfg);
  return out;
}

}  // namespace srhapc
