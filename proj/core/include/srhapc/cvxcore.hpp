#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace srhapc::cvx {

enum class Sense { LessEqual, Equal };

/// coeffs . x  (<=|=)  rhs
struct LinearRow {
  Eigen::VectorXd coeffs;
  double rhs = 0.0;
  Sense sense = Sense::LessEqual;
};

struct SmoothEval {
  double value = 0.0;
  Eigen::VectorXd grad;
};

using SmoothFn = std::function<SmoothEval(const Eigen::VectorXd&)>;
using HessFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Constraint g(x) >= 0 with g concave. `hess` is optional; when absent the
/// solver differentiates `fn`'s gradient by central differences.
struct SmoothConstraint {
  SmoothFn fn;
  HessFn hess;
};

/// maximize objective(x)
///   s.t. lower <= x <= upper          (+-inf entries allowed)
///        linear rows                  (<= or =)
///        g_k(x) >= 0, g_k concave
struct SmoothConcaveProgram {
  int n_vars = 0;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<LinearRow> linear_constraints;
  std::vector<SmoothConstraint> smooth_constraints;
  SmoothFn objective;
  HessFn objective_hess;  // optional
  /// Optional hint; the solver verifies it and falls back to phase one.
  Eigen::VectorXd strict_interior_point;
};

enum class SolveStatus { Optimal, MaxIterations, Infeasible, NumericalFailure };

const char* to_string(SolveStatus s);

struct Solution {
  Eigen::VectorXd x;
  double objective_value = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;  // Newton steps, phase one included
  SolveStatus status = SolveStatus::NumericalFailure;
};

struct SolveOptions {
  double tol = 1e-7;
  int max_newton = 200;        // per barrier phase
  double barrier_mult = 10.0;
  std::string iterate_dump_path;  // non-empty: append iterate CSV rows
  /// Test seam: when set, the barrier value is appended after every accepted
  /// Newton step, with a NaN separator at each phase start.
  std::vector<double>* barrier_value_trace = nullptr;
};

Solution solve(const SmoothConcaveProgram& program, const SolveOptions& opts = {});
Solution solve(const SmoothConcaveProgram& program, double tol, int max_iter);

struct KktReport {
  double stationarity = 0.0;
  double primal_infeasibility = 0.0;
  double complementarity = 0.0;
  double max_residual() const;
};

/// Residuals at x with multipliers recovered by nonnegative least squares
/// over the near-active constraints.
KktReport kkt_residuals(const SmoothConcaveProgram& program, const Eigen::VectorXd& x);

/// Perspective of u -> log2(1 + coef u): tau log2(1 + coef q / tau), with the
/// continuous extension 0 for tau <= floor. grad/hess are in (tau, q) order.
namespace perspective {
constexpr double kTauFloor = 1e-12;

double value(double coef, double tau, double q, double floor = kTauFloor);
void derivatives(double coef, double tau, double q, double& d_tau, double& d_q,
                 double floor = kTauFloor);
/// 2x2 Hessian entries: h_tt, h_tq, h_qq.
void hessian(double coef, double tau, double q, double& h_tt, double& h_tq,
             double& h_qq, double floor = kTauFloor);
}  // namespace perspective

}  // namespace srhapc::cvx
