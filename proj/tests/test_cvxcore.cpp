#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <srhapc/cvxcore.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

using namespace srhapc::cvx;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SmoothConcaveProgram boxed(int n, double lo, double hi) {
  SmoothConcaveProgram p;
  p.n_vars = n;
  p.lower = Eigen::VectorXd::Constant(n, lo);
  p.upper = Eigen::VectorXd::Constant(n, hi);
  return p;
}

SmoothFn linear_objective(const Eigen::VectorXd& c) {
  return [c](const Eigen::VectorXd& x) {
    SmoothEval e;
    e.value = c.dot(x);
    e.grad = c;
    return e;
  };
}

double rel(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace

TEST_CASE("interior quadratic optimum") {
  SmoothConcaveProgram p = boxed(1, 0.0, 2.0);
  p.objective = [](const Eigen::VectorXd& x) {
    SmoothEval e;
    e.value = -(x[0] - 1.0) * (x[0] - 1.0);
    e.grad = Eigen::VectorXd::Constant(1, -2.0 * (x[0] - 1.0));
    return e;
  };
  p.objective_hess = [](const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Constant(1, 1, -2.0);
  };
  const Solution s = solve(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(std::abs(s.x[0] - 1.0) < 1e-6);
  CHECK(std::abs(s.objective_value) < 1e-9);
  CHECK(s.kkt_residual < 1e-6);
}

TEST_CASE("linear program face") {
  SmoothConcaveProgram p = boxed(2, 0.0, kInf);
  LinearRow row;
  row.coeffs = Eigen::VectorXd::Ones(2);
  row.rhs = 1.0;
  p.linear_constraints.push_back(row);
  p.objective = linear_objective(Eigen::VectorXd::Ones(2));
  const Solution s = solve(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(std::abs(s.objective_value - 1.0) < 1e-6);
  CHECK(s.x[0] + s.x[1] < 1.0 + 1e-8);
}

TEST_CASE("perspective objective saturates both resources") {
  // maximize tau log2(1 + q/tau) on 0<=q<=0.5, 0<=tau<=1: monotone in both,
  // so the optimum is the corner (1, 0.5) with value log2(1.5)
  SmoothConcaveProgram p = boxed(2, 0.0, 1.0);
  p.upper[1] = 0.5;
  p.objective = [](const Eigen::VectorXd& x) {
    SmoothEval e;
    e.value = perspective::value(1.0, x[0], x[1]);
    e.grad.resize(2);
    perspective::derivatives(1.0, x[0], x[1], e.grad[0], e.grad[1]);
    return e;
  };
  p.objective_hess = [](const Eigen::VectorXd& x) {
    Eigen::MatrixXd h(2, 2);
    double h_tt, h_tq, h_qq;
    perspective::hessian(1.0, x[0], x[1], h_tt, h_tq, h_qq);
    h << h_tt, h_tq, h_tq, h_qq;
    return h;
  };
  const Solution s = solve(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(std::abs(s.x[0] - 1.0) < 1e-5);
  CHECK(std::abs(s.x[1] - 0.5) < 1e-5);
  // 2-d grid search at 1e-3 resolution lands on the same corner value
  CHECK(std::abs(s.objective_value - 0.58496250072115618) < 1e-6);
}

TEST_CASE("smooth ball constraint") {
  // maximize x+y inside the unit disk: optimum at (1,1)/sqrt(2)
  SmoothConcaveProgram p = boxed(2, 0.0, 2.0);
  p.objective = linear_objective(Eigen::VectorXd::Ones(2));
  SmoothConstraint ball;
  ball.fn = [](const Eigen::VectorXd& x) {
    SmoothEval e;
    e.value = 1.0 - x.squaredNorm();
    e.grad = -2.0 * x;
    return e;
  };
  ball.hess = [](const Eigen::VectorXd& x) {
    return Eigen::MatrixXd(-2.0 * Eigen::MatrixXd::Identity(x.size(), x.size()));
  };
  p.smooth_constraints.push_back(ball);
  const Solution s = solve(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  const double root_half = std::sqrt(0.5);
  CHECK(std::abs(s.x[0] - root_half) < 1e-5);
  CHECK(std::abs(s.x[1] - root_half) < 1e-5);
  CHECK(rel(s.objective_value, std::sqrt(2.0)) < 1e-6);
}

TEST_CASE("random linear programs match a vertex enumeration oracle") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  const int n = 3;

  for (int trial = 0; trial < 20; ++trial) {
    SmoothConcaveProgram p = boxed(n, 0.0, 1.0);
    for (int r = 0; r < 3; ++r) {
      LinearRow row;
      row.coeffs.resize(n);
      for (int i = 0; i < n; ++i) row.coeffs[i] = coef(rng);
      // keep the box midpoint strictly feasible
      row.rhs = row.coeffs.sum() * 0.5 + 0.25;
      p.linear_constraints.push_back(row);
    }
    Eigen::VectorXd c(n);
    for (int i = 0; i < n; ++i) c[i] = coef(rng);
    p.objective = linear_objective(c);

    // oracle: intersect every triple of facets, keep the best feasible vertex
    std::vector<Eigen::VectorXd> normals;
    std::vector<double> rhss;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e[i] = -1.0;
      normals.push_back(e);  // -x_i <= 0
      rhss.push_back(0.0);
      normals.push_back(-e);  // x_i <= 1
      rhss.push_back(1.0);
    }
    for (const LinearRow& row : p.linear_constraints) {
      normals.push_back(row.coeffs);
      rhss.push_back(row.rhs);
    }
    double best = -kInf;
    const int m = static_cast<int>(normals.size());
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        for (int k = j + 1; k < m; ++k) {
          Eigen::Matrix3d A;
          A.row(0) = normals[i].transpose();
          A.row(1) = normals[j].transpose();
          A.row(2) = normals[k].transpose();
          if (std::abs(A.determinant()) < 1e-10) continue;
          const Eigen::Vector3d v = A.partialPivLu().solve(
              Eigen::Vector3d(rhss[i], rhss[j], rhss[k]));
          bool feasible = true;
          for (int r = 0; r < m && feasible; ++r) {
            feasible = normals[r].dot(v) <= rhss[r] + 1e-9;
          }
          if (feasible) best = std::max(best, c.dot(v));
        }
      }
    }
    REQUIRE(best > -kInf);

    const Solution s = solve(p);
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(std::abs(s.objective_value - best) < 1e-5);
  }
}

TEST_CASE("infeasible programs are detected") {
  SUBCASE("contradictory boxes and rows") {
    SmoothConcaveProgram p = boxed(1, 0.0, 1.0);
    LinearRow row;
    row.coeffs = Eigen::VectorXd::Ones(1);
    row.rhs = -1.0;  // x <= -1 against x >= 0
    p.linear_constraints.push_back(row);
    p.objective = linear_objective(Eigen::VectorXd::Ones(1));
    CHECK(solve(p).status == SolveStatus::Infeasible);
  }
  SUBCASE("two functional rows with empty intersection") {
    SmoothConcaveProgram p = boxed(2, 0.0, 1.0);
    LinearRow row;
    row.coeffs = Eigen::VectorXd::Ones(2);
    row.rhs = -0.5;
    p.linear_constraints.push_back(row);
    p.objective = linear_objective(Eigen::VectorXd::Ones(2));
    CHECK(solve(p).status == SolveStatus::Infeasible);
  }
}

TEST_CASE("barrier value increases within each centering phase") {
  SmoothConcaveProgram p = boxed(2, 0.0, 1.0);
  p.upper[1] = 0.5;
  p.objective = [](const Eigen::VectorXd& x) {
    SmoothEval e;
    e.value = perspective::value(3.0, x[0], x[1]);
    e.grad.resize(2);
    perspective::derivatives(3.0, x[0], x[1], e.grad[0], e.grad[1]);
    return e;
  };
  std::vector<double> trace;
  SolveOptions opts;
  opts.barrier_value_trace = &trace;
  const Solution s = solve(p, opts);
  REQUIRE(s.status == SolveStatus::Optimal);
  REQUIRE(!trace.empty());
  int checked = 0;
  double prev = -kInf;
  for (double v : trace) {
    if (std::isnan(v)) {
      prev = -kInf;  // new phase, new barrier objective
      continue;
    }
    CHECK(v >= prev - 1e-9 * std::max(1.0, std::abs(v)));
    prev = v;
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("kkt residuals at and away from the optimum") {
  SmoothConcaveProgram p = boxed(2, 0.0, 1.0);
  LinearRow row;
  row.coeffs = Eigen::VectorXd::Ones(2);
  row.rhs = 1.0;
  p.linear_constraints.push_back(row);
  p.objective = [](const Eigen::VectorXd& x) {
    SmoothEval e;
    e.value = -(x[0] - 0.3) * (x[0] - 0.3) - (x[1] - 0.2) * (x[1] - 0.2);
    e.grad.resize(2);
    e.grad[0] = -2.0 * (x[0] - 0.3);
    e.grad[1] = -2.0 * (x[1] - 0.2);
    return e;
  };
  const Solution s = solve(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(kkt_residuals(p, s.x).max_residual() < 1e-6);

  Eigen::VectorXd interior(2);
  interior << 0.6, 0.1;
  const KktReport off = kkt_residuals(p, interior);
  CHECK(off.primal_infeasibility == 0.0);
  CHECK(off.stationarity > 1e-3);
}

TEST_CASE("identical programs solve to identical bits") {
  SmoothConcaveProgram p = boxed(2, 0.0, 1.0);
  p.objective = [](const Eigen::VectorXd& x) {
    SmoothEval e;
    e.value = perspective::value(2.0, x[0], x[1]) - 0.1 * x[1];
    e.grad.resize(2);
    perspective::derivatives(2.0, x[0], x[1], e.grad[0], e.grad[1]);
    e.grad[1] -= 0.1;
    return e;
  };
  const Solution s1 = solve(p);
  const Solution s2 = solve(p);
  REQUIRE(s1.status == SolveStatus::Optimal);
  CHECK(s1.objective_value == s2.objective_value);
  CHECK((s1.x - s2.x).cwiseAbs().maxCoeff() == 0.0);
  CHECK(s1.iterations == s2.iterations);
}

TEST_CASE("iterate dump writes csv rows") {
  SmoothConcaveProgram p = boxed(1, 0.0, 2.0);
  p.objective = [](const Eigen::VectorXd& x) {
    SmoothEval e;
    e.value = -(x[0] - 1.0) * (x[0] - 1.0);
    e.grad = Eigen::VectorXd::Constant(1, -2.0 * (x[0] - 1.0));
    return e;
  };
  const std::string path = "test_cvxcore_dump.csv";
  SolveOptions opts;
  opts.iterate_dump_path = path;
  REQUIRE(solve(p, opts).status == SolveStatus::Optimal);
  std::ifstream in(path);
  REQUIRE(in.good());
  int lines = 0;
  std::string line;
  while (std::getline(in, line)) ++lines;
  in.close();
  std::remove(path.c_str());
  CHECK(lines >= 2);  // header plus at least one iterate
}

TEST_CASE("perspective terms: values, gradients, curvature") {
  SUBCASE("closed form and continuity at the floor") {
    CHECK(perspective::value(1.0, 1.0, 0.5) == doctest::Approx(std::log2(1.5)).epsilon(1e-12));
    CHECK(perspective::value(1.0, 0.0, 0.0) == 0.0);
    CHECK(perspective::value(1.0, 1e-13, 1e-13) == 0.0);  // below the floor
    // tau log2(1 + q/tau) -> 0 as tau -> 0 with q proportional to tau
    CHECK(perspective::value(1.0, 1e-9, 1e-10) < 1e-8);
  }
  SUBCASE("gradients match finite differences") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int k = 0; k < 200; ++k) {
      const double coef = 0.5 + 4.0 * u(rng);
      const double tau = u(rng);
      const double q = 0.8 * tau * u(rng);
      double d_tau, d_q;
      perspective::derivatives(coef, tau, q, d_tau, d_q);
      const double h = 1e-7;
      const double fd_tau =
          (perspective::value(coef, tau + h, q) - perspective::value(coef, tau - h, q)) / (2 * h);
      const double fd_q =
          (perspective::value(coef, tau, q + h) - perspective::value(coef, tau, q - h)) / (2 * h);
      CHECK(std::abs(d_tau - fd_tau) < 1e-5 * std::max(1.0, std::abs(d_tau)));
      CHECK(std::abs(d_q - fd_q) < 1e-5 * std::max(1.0, std::abs(d_q)));
    }
  }
  SUBCASE("midpoint concavity over random pairs") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
      const double coef = 0.5 + 4.0 * u(rng);
      const double tau1 = 0.01 + u(rng), q1 = tau1 * u(rng);
      const double tau2 = 0.01 + u(rng), q2 = tau2 * u(rng);
      const double mid = perspective::value(coef, 0.5 * (tau1 + tau2), 0.5 * (q1 + q2));
      const double avg = 0.5 * (perspective::value(coef, tau1, q1) +
                                perspective::value(coef, tau2, q2));
      CHECK(mid >= avg - 1e-9);
    }
  }
  SUBCASE("hessian is negative semidefinite") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int k = 0; k < 200; ++k) {
      const double tau = u(rng), q = 0.9 * tau * u(rng);
      double h_tt, h_tq, h_qq;
      perspective::hessian(2.0, tau, q, h_tt, h_tq, h_qq);
      CHECK(h_tt <= 1e-12);
      CHECK(h_qq <= 1e-12);
      CHECK(h_tt * h_qq - h_tq * h_tq >= -1e-12);  // det >= 0 for concavity
    }
  }
}
