#include "srhapc/cvxcore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace srhapc::cvx {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct IneqRow {  // c . x <= rhs, slack = rhs - c . x
  Eigen::VectorXd c;
  double rhs = 0.0;
};

// Every inequality of the program flattened into linear rows (box bounds
// included) plus the smooth g(x) >= 0 evaluators.
struct FlatIneqs {
  std::vector<IneqRow> lin;
  std::vector<SmoothConstraint> smooth;
};

FlatIneqs flatten_inequalities(const SmoothConcaveProgram& p) {
  FlatIneqs out;
  const int n = p.n_vars;
  for (int i = 0; i < n; ++i) {
    if (p.lower[i] > -kInf) {
      IneqRow r;
      r.c = Eigen::VectorXd::Zero(n);
      r.c[i] = -1.0;
      r.rhs = -p.lower[i];
      out.lin.push_back(std::move(r));
    }
    if (p.upper[i] < kInf) {
      IneqRow r;
      r.c = Eigen::VectorXd::Zero(n);
      r.c[i] = 1.0;
      r.rhs = p.upper[i];
      out.lin.push_back(std::move(r));
    }
  }
  for (const auto& row : p.linear_constraints) {
    if (row.sense == Sense::LessEqual) {
      out.lin.push_back({row.coeffs, row.rhs});
    }
  }
  out.smooth = p.smooth_constraints;
  return out;
}

Eigen::MatrixXd fd_hessian_of_grad(const SmoothFn& fn, const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd H(n, n);
  for (int j = 0; j < n; ++j) {
    const double h = 1e-6 * (1.0 + std::abs(x[j]));
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    Eigen::VectorXd gp, gm;
    try {
      gp = fn(xp).grad;
      gm = fn(xm).grad;
      H.col(j) = (gp - gm) / (2.0 * h);
    } catch (const std::exception&) {
      // boundary of the evaluator's domain: fall back to a one-sided step
      const Eigen::VectorXd g0 = fn(x).grad;
      try {
        gp = fn(xp).grad;
        H.col(j) = (gp - g0) / h;
      } catch (const std::exception&) {
        gm = fn(xm).grad;
        H.col(j) = (g0 - gm) / h;
      }
    }
  }
  return 0.5 * (H + H.transpose());
}

struct BarrierState {
  double barrier_value = 0.0;  // t * f + sum log slacks
  double f_value = 0.0;
  Eigen::VectorXd grad;        // gradient of the barrier
  Eigen::MatrixXd neg_hess;    // -(Hessian of the barrier), PSD for concave data
};

// Value-only probe used by the line search; false when out of domain.
bool barrier_value_at(const SmoothConcaveProgram& p, const FlatIneqs& iq, double t,
                      const Eigen::VectorXd& x, double* value, double* f_value) {
  double logs = 0.0;
  for (const auto& r : iq.lin) {
    const double s = r.rhs - r.c.dot(x);
    if (!(s > 0.0)) return false;
    logs += std::log(s);
  }
  try {
    for (const auto& g : iq.smooth) {
      const double s = g.fn(x).value;
      if (!(s > 0.0) || !std::isfinite(s)) return false;
      logs += std::log(s);
    }
    const double f = p.objective(x).value;
    if (!std::isfinite(f)) return false;
    *value = t * f + logs;
    *f_value = f;
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

// Full derivative assembly at a strictly feasible x.
bool barrier_derivatives(const SmoothConcaveProgram& p, const FlatIneqs& iq, double t,
                         const Eigen::VectorXd& x, BarrierState* st) {
  const int n = p.n_vars;
  const SmoothEval f = p.objective(x);
  if (!std::isfinite(f.value) || f.grad.size() != n) return false;
  double logs = 0.0;
  Eigen::VectorXd grad = t * f.grad;
  Eigen::MatrixXd Hf = p.objective_hess ? p.objective_hess(x) : fd_hessian_of_grad(p.objective, x);
  Eigen::MatrixXd neg_hess = -t * Hf;
  for (const auto& r : iq.lin) {
    const double s = r.rhs - r.c.dot(x);
    if (!(s > 0.0)) return false;
    logs += std::log(s);
    grad.noalias() -= r.c / s;
    neg_hess.noalias() += (r.c * r.c.transpose()) / (s * s);
  }
  for (const auto& g : iq.smooth) {
    const SmoothEval e = g.fn(x);
    if (!(e.value > 0.0) || !std::isfinite(e.value) || e.grad.size() != n) return false;
    logs += std::log(e.value);
    grad.noalias() += e.grad / e.value;
    const Eigen::MatrixXd Hg = g.hess ? g.hess(x) : fd_hessian_of_grad(g.fn, x);
    neg_hess.noalias() -= Hg / e.value;
    neg_hess.noalias() += (e.grad * e.grad.transpose()) / (e.value * e.value);
  }
  st->barrier_value = t * f.value + logs;
  st->f_value = f.value;
  st->grad = std::move(grad);
  st->neg_hess = std::move(neg_hess);
  return true;
}

struct CenterOutcome {
  bool centered = false;
  bool numerical_failure = false;
  int steps = 0;
};

struct DumpSink {
  std::ofstream* out = nullptr;
  std::vector<double>* barrier_trace = nullptr;
};

// Damped Newton ascent on the barrier at fixed t. Stops when the Newton
// decrement certifies centering, the step budget runs out, or regularized
// factorization keeps failing.
CenterOutcome center(const SmoothConcaveProgram& p, const FlatIneqs& iq, double t,
                     Eigen::VectorXd& x, int max_newton, int* global_iter,
                     const DumpSink& dump) {
  constexpr double kCenterTol = 1e-9;   // decrement^2 / 2 threshold
  constexpr double kArmijo = 0.01;
  CenterOutcome out;
  const int n = p.n_vars;
  BarrierState st;
  if (!barrier_derivatives(p, iq, t, x, &st)) {
    out.numerical_failure = true;
    return out;
  }
  if (dump.barrier_trace) {
    dump.barrier_trace->push_back(std::numeric_limits<double>::quiet_NaN());
    dump.barrier_trace->push_back(st.barrier_value);
  }
  for (int it = 0; it < max_newton; ++it) {
    // Levenberg ladder: factor -(hess) + lambda I until it is usably PD.
    const double scale = std::max(st.neg_hess.trace() / n, 1.0);
    double lambda = 0.0;
    Eigen::VectorXd dx;
    bool solved = false;
    for (int tryi = 0; tryi < 40; ++tryi) {
      Eigen::MatrixXd H = st.neg_hess;
      if (lambda > 0.0) H.diagonal().array() += lambda;
      Eigen::LLT<Eigen::MatrixXd> llt(H);
      if (llt.info() == Eigen::Success) {
        dx = llt.solve(st.grad);
        if (dx.allFinite() && st.grad.dot(dx) >= 0.0) {
          solved = true;
          break;
        }
      }
      lambda = (lambda == 0.0) ? 1e-10 * scale : lambda * 10.0;
    }
    if (!solved) {
      out.numerical_failure = true;
      return out;
    }
    const double dec2 = st.grad.dot(dx);
    if (dump.out) {
      (*dump.out) << *global_iter << ',' << t << ',' << st.f_value << ',' << 0.5 * dec2 << '\n';
    }
    if (0.5 * dec2 < kCenterTol) {
      out.centered = true;
      return out;
    }
    // Exact distance to the linear boundary caps the step; smooth rows are
    // handled by the domain check inside the backtracking probe.
    double alpha = 1.0;
    for (const auto& r : iq.lin) {
      const double drop = r.c.dot(dx);
      if (drop > 0.0) {
        const double s = r.rhs - r.c.dot(x);
        alpha = std::min(alpha, 0.99 * s / drop);
      }
    }
    double new_value = 0.0, new_f = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Eigen::VectorXd xc = x + alpha * dx;
      if (barrier_value_at(p, iq, t, xc, &new_value, &new_f) &&
          new_value >= st.barrier_value + kArmijo * alpha * dec2) {
        x = xc;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    ++(*global_iter);
    ++out.steps;
    if (!accepted) {
      // Progress impossible at machine precision; accept the point as
      // centered rather than looping.
      out.centered = true;
      return out;
    }
    if (!barrier_derivatives(p, iq, t, x, &st)) {
      out.numerical_failure = true;
      return out;
    }
    if (dump.barrier_trace) dump.barrier_trace->push_back(st.barrier_value);
  }
  return out;  // budget exhausted, not centered
}

// Initial point strictly inside the box (ignoring other rows).
Eigen::VectorXd box_midpoint(const SmoothConcaveProgram& p) {
  Eigen::VectorXd x(p.n_vars);
  for (int i = 0; i < p.n_vars; ++i) {
    const double lo = p.lower[i], up = p.upper[i];
    if (lo > -kInf && up < kInf) {
      x[i] = 0.5 * (lo + up);
    } else if (lo > -kInf) {
      x[i] = lo + 1.0;
    } else if (up < kInf) {
      x[i] = up - 1.0;
    } else {
      x[i] = 0.0;
    }
  }
  return x;
}

double min_slack(const SmoothConcaveProgram& p, const FlatIneqs& iq, const Eigen::VectorXd& x) {
  double m = kInf;
  for (const auto& r : iq.lin) m = std::min(m, r.rhs - r.c.dot(x));
  try {
    for (const auto& g : iq.smooth) {
      const double v = g.fn(x).value;
      if (!std::isfinite(v)) return -kInf;
      m = std::min(m, v);
    }
  } catch (const std::exception&) {
    return -kInf;
  }
  return m;
}

// Phase one: maximize u subject to every functional inequality relaxed by u
// while the variable boxes stay hard. Any iterate with u > 0 is strictly
// feasible for the original program. Boxes are never relaxed: outside them
// the smooth rows lose concavity (perspective terms are only defined on the
// nonnegative orthant), which would create spurious stationary points.
struct PhaseOneResult {
  bool feasible = false;
  bool numerical_failure = false;
  Eigen::VectorXd x;
};

PhaseOneResult phase_one(const SmoothConcaveProgram& p, const Eigen::VectorXd& x0,
                         int max_newton, int* global_iter) {
  const int n = p.n_vars;
  SmoothConcaveProgram aux;
  aux.n_vars = n + 1;
  aux.lower = Eigen::VectorXd::Constant(n + 1, -kInf);
  aux.upper = Eigen::VectorXd::Constant(n + 1, kInf);
  aux.lower.head(n) = p.lower;
  aux.upper.head(n) = p.upper;

  // Seed strictly inside the box so the hard box barriers are finite.
  Eigen::VectorXd xs = x0;
  for (int i = 0; i < n; ++i) {
    const double lo = p.lower[i], up = p.upper[i];
    if (!std::isfinite(xs[i])) xs[i] = 0.0;
    if (lo > -kInf && up < kInf) {
      const double margin = 1e-6 * std::max(up - lo, 0.0);
      if (!(up - lo > 0.0)) {
        PhaseOneResult r;
        r.numerical_failure = true;  // degenerate box, no strict interior
        return r;
      }
      xs[i] = std::clamp(xs[i], lo + margin, up - margin);
    } else if (lo > -kInf) {
      xs[i] = std::max(xs[i], lo + 1e-3 * std::max(1.0, std::abs(lo)));
    } else if (up < kInf) {
      xs[i] = std::min(xs[i], up - 1e-3 * std::max(1.0, std::abs(up)));
    }
  }

  // Worst functional slack at the seed fixes the starting relaxation level.
  double seed_slack = 1e3;
  for (const auto& row : p.linear_constraints) {
    if (row.sense == Sense::LessEqual) {
      seed_slack = std::min(seed_slack, row.rhs - row.coeffs.dot(xs));
    }
  }
  try {
    for (const auto& g : p.smooth_constraints) {
      const double v = g.fn(xs).value;
      if (!std::isfinite(v)) {
        seed_slack = -kInf;
        break;
      }
      seed_slack = std::min(seed_slack, v);
    }
  } catch (const std::exception&) {
    seed_slack = -kInf;
  }
  const double u0 = seed_slack - 1.0;
  if (!std::isfinite(u0)) {
    PhaseOneResult r;
    r.numerical_failure = true;
    return r;
  }
  aux.upper[n] = std::max(1.0, u0 + 2.0);  // keeps the phase-one objective bounded
  for (const auto& row : p.linear_constraints) {
    if (row.sense != Sense::LessEqual) continue;
    LinearRow lr;
    lr.coeffs = Eigen::VectorXd::Zero(n + 1);
    lr.coeffs.head(n) = row.coeffs;
    lr.coeffs[n] = 1.0;  // c.x + u <= rhs
    lr.rhs = row.rhs;
    lr.sense = Sense::LessEqual;
    aux.linear_constraints.push_back(std::move(lr));
  }
  for (const auto& g : p.smooth_constraints) {
    SmoothConstraint sc;
    SmoothFn base = g.fn;
    sc.fn = [base, n](const Eigen::VectorXd& y) {
      SmoothEval e = base(y.head(n));
      SmoothEval out;
      out.value = e.value - y[n];
      out.grad = Eigen::VectorXd::Zero(n + 1);
      out.grad.head(n) = e.grad;
      out.grad[n] = -1.0;
      return out;
    };
    if (g.hess) {
      HessFn baseh = g.hess;
      sc.hess = [baseh, n](const Eigen::VectorXd& y) {
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n + 1, n + 1);
        H.topLeftCorner(n, n) = baseh(y.head(n));
        return H;
      };
    }
    aux.smooth_constraints.push_back(std::move(sc));
  }
  aux.objective = [n](const Eigen::VectorXd& y) {
    SmoothEval e;
    e.value = y[n];
    e.grad = Eigen::VectorXd::Zero(n + 1);
    e.grad[n] = 1.0;
    return e;
  };
  aux.objective_hess = [n](const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Zero(n + 1, n + 1);
  };

  Eigen::VectorXd y(n + 1);
  y.head(n) = xs;
  y[n] = u0;
  const FlatIneqs aux_iq = flatten_inequalities(aux);

  PhaseOneResult res;
  double t = 1.0;
  const double m = static_cast<double>(aux_iq.lin.size() + aux_iq.smooth.size());
  const double gap_tol = 1e-10;
  for (int phase = 0; phase < 60; ++phase) {
    const CenterOutcome c = center(aux, aux_iq, t, y, max_newton, global_iter, {});
    if (c.numerical_failure) {
      res.numerical_failure = true;
      return res;
    }
    if (y[n] >= 1e-4) break;  // comfortably strict interior found
    if (m / t < gap_tol) break;
    t *= 10.0;
  }
  if (y[n] > 1e-12) {
    res.feasible = true;
    res.x = y.head(n);
  }
  return res;
}

struct NnlsResult {
  Eigen::VectorXd lambda;  // per inequality (0 when excluded)
  Eigen::VectorXd nu;      // per equality row
  double stationarity = 0.0;
};

// Multiplier recovery: least squares over near-active inequality gradients
// (lambda >= 0 by iterative pruning) plus free equality multipliers.
NnlsResult recover_multipliers(const Eigen::VectorXd& grad_f,
                               const std::vector<Eigen::VectorXd>& ineq_grads,
                               const std::vector<double>& slacks,
                               const std::vector<Eigen::VectorXd>& eq_rows,
                               const Eigen::VectorXd& x) {
  const int n = static_cast<int>(grad_f.size());
  const int mi = static_cast<int>(ineq_grads.size());
  const int me = static_cast<int>(eq_rows.size());
  const double act_tol = 1e-2 * (1.0 + x.lpNorm<Eigen::Infinity>());
  std::vector<int> active;
  for (int j = 0; j < mi; ++j) {
    const double scale = 1.0 + ineq_grads[j].norm();
    if (slacks[j] / scale <= act_tol) active.push_back(j);
  }
  NnlsResult res;
  res.lambda = Eigen::VectorXd::Zero(mi);
  res.nu = Eigen::VectorXd::Zero(me);
  for (int round = 0; round <= mi; ++round) {
    const int cols = static_cast<int>(active.size()) + me;
    Eigen::VectorXd z;
    if (cols > 0) {
      Eigen::MatrixXd M(n, cols);
      for (size_t k = 0; k < active.size(); ++k) M.col(static_cast<int>(k)) = ineq_grads[active[k]];
      for (int e = 0; e < me; ++e) M.col(static_cast<int>(active.size()) + e) = eq_rows[e];
      z = M.completeOrthogonalDecomposition().solve(-grad_f);
    }
    // prune the most negative inequality multiplier, if any
    int worst = -1;
    double worst_val = -1e-12;
    for (size_t k = 0; k < active.size(); ++k) {
      if (z[static_cast<int>(k)] < worst_val) {
        worst_val = z[static_cast<int>(k)];
        worst = static_cast<int>(k);
      }
    }
    if (worst < 0) {
      Eigen::VectorXd resid = grad_f;
      for (size_t k = 0; k < active.size(); ++k) {
        res.lambda[active[k]] = z[static_cast<int>(k)];
        resid += z[static_cast<int>(k)] * ineq_grads[active[k]];
      }
      for (int e = 0; e < me; ++e) {
        res.nu[e] = z[static_cast<int>(active.size()) + e];
        resid += res.nu[e] * eq_rows[e];
      }
      res.stationarity = resid.lpNorm<Eigen::Infinity>();
      return res;
    }
    active.erase(active.begin() + worst);
  }
  res.stationarity = grad_f.lpNorm<Eigen::Infinity>();
  return res;
}

void validate_program(const SmoothConcaveProgram& p) {
  if (p.n_vars < 1) throw std::invalid_argument("cvx: program needs at least one variable");
  if (p.lower.size() != p.n_vars || p.upper.size() != p.n_vars) {
    throw std::invalid_argument("cvx: lower/upper bound vectors must have n_vars entries");
  }
  for (int i = 0; i < p.n_vars; ++i) {
    if (p.lower[i] > p.upper[i]) throw std::invalid_argument("cvx: empty box (lower > upper)");
  }
  for (const auto& r : p.linear_constraints) {
    if (r.coeffs.size() != p.n_vars) {
      throw std::invalid_argument("cvx: linear row dimension mismatch");
    }
  }
  if (!p.objective) throw std::invalid_argument("cvx: objective evaluator missing");
  for (const auto& g : p.smooth_constraints) {
    if (!g.fn) throw std::invalid_argument("cvx: smooth constraint evaluator missing");
  }
}

Solution solve_no_equalities(const SmoothConcaveProgram& p, const SolveOptions& opts);

// Equality rows are eliminated exactly: x = x_p + Z y with Z a kernel basis,
// and the whole program is rewritten over y.
Solution solve_with_equalities(const SmoothConcaveProgram& p, const SolveOptions& opts) {
  const int n = p.n_vars;
  std::vector<const LinearRow*> eqs;
  for (const auto& r : p.linear_constraints) {
    if (r.sense == Sense::Equal) eqs.push_back(&r);
  }
  const int me = static_cast<int>(eqs.size());
  Eigen::MatrixXd A(me, n);
  Eigen::VectorXd b(me);
  for (int e = 0; e < me; ++e) {
    A.row(e) = eqs[e]->coeffs.transpose();
    b[e] = eqs[e]->rhs;
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  const Eigen::VectorXd xp = cod.solve(b);
  Solution sol;
  if ((A * xp - b).lpNorm<Eigen::Infinity>() > 1e-8 * (1.0 + b.lpNorm<Eigen::Infinity>())) {
    sol.status = SolveStatus::Infeasible;  // inconsistent equality system
    sol.x = xp;
    return sol;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  const Eigen::MatrixXd Z = lu.kernel();
  if (Z.cols() == 0 || (Z.cols() == 1 && Z.isZero())) {
    // Equalities pin x completely; just report the unique candidate.
    const FlatIneqs iq = flatten_inequalities(p);
    const double ms = min_slack(p, iq, xp);
    sol.x = xp;
    if (ms < -1e-9) {
      sol.status = SolveStatus::Infeasible;
      return sol;
    }
    sol.objective_value = p.objective(xp).value;
    sol.kkt_residual = kkt_residuals(p, xp).max_residual();
    sol.status = SolveStatus::Optimal;
    return sol;
  }
  const int nz = static_cast<int>(Z.cols());

  SmoothConcaveProgram red;
  red.n_vars = nz;
  red.lower = Eigen::VectorXd::Constant(nz, -kInf);
  red.upper = Eigen::VectorXd::Constant(nz, kInf);
  for (int i = 0; i < n; ++i) {
    if (p.lower[i] > -kInf) {
      LinearRow r;
      r.coeffs = -Z.row(i).transpose();
      r.rhs = xp[i] - p.lower[i];
      red.linear_constraints.push_back(std::move(r));
    }
    if (p.upper[i] < kInf) {
      LinearRow r;
      r.coeffs = Z.row(i).transpose();
      r.rhs = p.upper[i] - xp[i];
      red.linear_constraints.push_back(std::move(r));
    }
  }
  for (const auto& row : p.linear_constraints) {
    if (row.sense != Sense::LessEqual) continue;
    LinearRow r;
    r.coeffs = Z.transpose() * row.coeffs;
    r.rhs = row.rhs - row.coeffs.dot(xp);
    red.linear_constraints.push_back(std::move(r));
  }
  auto lift = [Z, xp](const Eigen::VectorXd& y) -> Eigen::VectorXd { return xp + Z * y; };
  for (const auto& g : p.smooth_constraints) {
    SmoothConstraint sc;
    SmoothFn base = g.fn;
    sc.fn = [base, lift, Z](const Eigen::VectorXd& y) {
      SmoothEval e = base(lift(y));
      SmoothEval out;
      out.value = e.value;
      out.grad = Z.transpose() * e.grad;
      return out;
    };
    if (g.hess) {
      HessFn baseh = g.hess;
      sc.hess = [baseh, lift, Z](const Eigen::VectorXd& y) -> Eigen::MatrixXd {
        return Z.transpose() * baseh(lift(y)) * Z;
      };
    }
    red.smooth_constraints.push_back(std::move(sc));
  }
  SmoothFn obj = p.objective;
  red.objective = [obj, lift, Z](const Eigen::VectorXd& y) {
    SmoothEval e = obj(lift(y));
    SmoothEval out;
    out.value = e.value;
    out.grad = Z.transpose() * e.grad;
    return out;
  };
  if (p.objective_hess) {
    HessFn objh = p.objective_hess;
    red.objective_hess = [objh, lift, Z](const Eigen::VectorXd& y) -> Eigen::MatrixXd {
      return Z.transpose() * objh(lift(y)) * Z;
    };
  }
  if (p.strict_interior_point.size() == n) {
    red.strict_interior_point =
        Z.completeOrthogonalDecomposition().solve(p.strict_interior_point - xp);
  }

  Solution rsol = solve_no_equalities(red, opts);
  sol = rsol;
  sol.x = xp + Z * rsol.x;
  if (rsol.status == SolveStatus::Optimal || rsol.status == SolveStatus::MaxIterations) {
    sol.kkt_residual = kkt_residuals(p, sol.x).max_residual();
  }
  return sol;
}

Solution solve_no_equalities(const SmoothConcaveProgram& p, const SolveOptions& opts) {
  const FlatIneqs iq = flatten_inequalities(p);
  const double m = static_cast<double>(iq.lin.size() + iq.smooth.size());
  Solution sol;
  int global_iter = 0;

  std::ofstream dump_file;
  DumpSink dump;
  if (!opts.iterate_dump_path.empty()) {
    dump_file.open(opts.iterate_dump_path, std::ios::app);
    if (dump_file.tellp() == 0) dump_file << "iteration,barrier_t,objective,residual\n";
    dump.out = &dump_file;
  }
  dump.barrier_trace = opts.barrier_value_trace;

  // Starting point: verified caller hint, else phase one (seeded by the
  // hint when present so a nearly-feasible warm start stays cheap).
  Eigen::VectorXd x;
  bool have_start = false;
  if (p.strict_interior_point.size() == p.n_vars) {
    if (min_slack(p, iq, p.strict_interior_point) > 0.0) {
      x = p.strict_interior_point;
      have_start = true;
    }
  }
  if (!have_start) {
    Eigen::VectorXd x0 = (p.strict_interior_point.size() == p.n_vars)
                             ? p.strict_interior_point
                             : box_midpoint(p);
    const PhaseOneResult p1 = phase_one(p, x0, opts.max_newton, &global_iter);
    if (p1.numerical_failure) {
      sol.status = SolveStatus::NumericalFailure;
      sol.iterations = global_iter;
      return sol;
    }
    if (!p1.feasible) {
      sol.status = SolveStatus::Infeasible;
      sol.iterations = global_iter;
      return sol;
    }
    x = p1.x;
  }

  if (m == 0.0) {
    // Unconstrained concave maximization: a single Newton phase suffices.
    const CenterOutcome c = center(p, iq, 1.0, x, opts.max_newton, &global_iter, dump);
    sol.x = x;
    sol.objective_value = p.objective(x).value;
    sol.iterations = global_iter;
    sol.kkt_residual = kkt_residuals(p, x).max_residual();
    sol.status = c.numerical_failure
                     ? SolveStatus::NumericalFailure
                     : (c.centered ? SolveStatus::Optimal : SolveStatus::MaxIterations);
    return sol;
  }

  double t = 1.0;
  bool budget_hit = false, numfail = false;
  while (true) {
    const CenterOutcome c = center(p, iq, t, x, opts.max_newton, &global_iter, dump);
    if (c.numerical_failure) {
      numfail = true;
      break;
    }
    if (!c.centered) {
      budget_hit = true;
      break;
    }
    if (m / t < opts.tol) break;
    t *= opts.barrier_mult;
  }

  sol.x = x;
  sol.objective_value = p.objective(x).value;
  if (numfail) {
    sol.iterations = global_iter;
    sol.status = SolveStatus::NumericalFailure;
    return sol;
  }

  // Certify; a few extra barrier phases are allowed to tighten the duals
  // when the multiplier recovery is not yet inside tolerance.
  KktReport rep = kkt_residuals(p, x);
  int extra = 0;
  while (!budget_hit && rep.max_residual() > opts.tol && extra < 4) {
    t *= opts.barrier_mult;
    const CenterOutcome c = center(p, iq, t, x, opts.max_newton, &global_iter, dump);
    if (c.numerical_failure || !c.centered) {
      budget_hit = true;
      break;
    }
    rep = kkt_residuals(p, x);
    ++extra;
  }
  sol.x = x;
  sol.objective_value = p.objective(x).value;
  sol.kkt_residual = rep.max_residual();
  sol.iterations = global_iter;
  sol.status = (!budget_hit && rep.max_residual() <= opts.tol) ? SolveStatus::Optimal
                                                               : SolveStatus::MaxIterations;
  return sol;
}

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

double KktReport::max_residual() const {
  return std::max({stationarity, primal_infeasibility, complementarity});
}

Solution solve(const SmoothConcaveProgram& program, const SolveOptions& opts) {
  validate_program(program);
  if (!(opts.tol > 0.0) || opts.max_newton < 1 || !(opts.barrier_mult > 1.0)) {
    throw std::invalid_argument("cvx: solve options out of range");
  }
  for (const auto& r : program.linear_constraints) {
    if (r.sense == Sense::Equal) return solve_with_equalities(program, opts);
  }
  return solve_no_equalities(program, opts);
}

Solution solve(const SmoothConcaveProgram& program, double tol, int max_iter) {
  SolveOptions opts;
  opts.tol = tol;
  opts.max_newton = max_iter;
  return solve(program, opts);
}

KktReport kkt_residuals(const SmoothConcaveProgram& program, const Eigen::VectorXd& x) {
  validate_program(program);
  if (x.size() != program.n_vars) {
    throw std::invalid_argument("cvx: kkt point dimension mismatch");
  }
  const FlatIneqs iq = flatten_inequalities(program);
  std::vector<Eigen::VectorXd> grads;
  std::vector<double> slacks;
  grads.reserve(iq.lin.size() + iq.smooth.size());
  for (const auto& r : iq.lin) {
    grads.push_back(-r.c);  // gradient of the slack rhs - c.x
    slacks.push_back(r.rhs - r.c.dot(x));
  }
  for (const auto& g : iq.smooth) {
    const SmoothEval e = g.fn(x);
    grads.push_back(e.grad);
    slacks.push_back(e.value);
  }
  std::vector<Eigen::VectorXd> eq_rows;
  double eq_viol = 0.0;
  for (const auto& r : program.linear_constraints) {
    if (r.sense == Sense::Equal) {
      eq_rows.push_back(r.coeffs);
      eq_viol = std::max(eq_viol, std::abs(r.coeffs.dot(x) - r.rhs));
    }
  }
  const Eigen::VectorXd grad_f = program.objective(x).grad;
  const NnlsResult nn = recover_multipliers(grad_f, grads, slacks, eq_rows, x);
  KktReport rep;
  rep.stationarity = nn.stationarity;
  double worst_slack = 0.0, compl_gap = 0.0;
  for (size_t j = 0; j < slacks.size(); ++j) {
    worst_slack = std::max(worst_slack, -slacks[j]);
    compl_gap = std::max(compl_gap, std::abs(nn.lambda[static_cast<int>(j)] * slacks[j]));
  }
  rep.primal_infeasibility = std::max(worst_slack, eq_viol);
  rep.complementarity = compl_gap;
  return rep;
}

namespace perspective {

double value(double coef, double tau, double q, double floor) {
  if (tau <= floor) return 0.0;
  const double arg = 1.0 + coef * q / tau;
  if (!(arg > 0.0)) throw std::invalid_argument("perspective: log argument must be positive");
  return tau * std::log2(arg);
}

void derivatives(double coef, double tau, double q, double& d_tau, double& d_q, double floor) {
  if (tau <= floor) {
    d_tau = 0.0;
    d_q = 0.0;
    return;
  }
  const double u = q / tau;
  const double arg = 1.0 + coef * u;
  if (!(arg > 0.0)) throw std::invalid_argument("perspective: log argument must be positive");
  const double gp = coef / (M_LN2 * arg);  // d/du log2(1 + coef u)
  d_q = gp;
  d_tau = std::log2(arg) - u * gp;
}

void hessian(double coef, double tau, double q, double& h_tt, double& h_tq, double& h_qq,
             double floor) {
  if (tau <= floor) {
    h_tt = h_tq = h_qq = 0.0;
    return;
  }
  const double u = q / tau;
  const double arg = 1.0 + coef * u;
  if (!(arg > 0.0)) throw std::invalid_argument("perspective: log argument must be positive");
  const double gpp = -coef * coef / (M_LN2 * arg * arg);  // second derivative in u
  h_qq = gpp / tau;
  h_tq = -u * gpp / tau;
  h_tt = u * u * gpp / tau;
}

}  // namespace perspective

}  // namespace srhapc::cvx
