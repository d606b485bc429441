#include "srhapc/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace srhapc {

GaussHermite::GaussHermite(int order) {
  if (order < 1) throw std::invalid_argument("gauss-hermite: order must be >= 1");
  // Golub-Welsch: nodes are eigenvalues of the Jacobi matrix of the
  // physicists' Hermite recurrence (diagonal 0, off-diagonal sqrt(k/2)),
  // weights are sqrt(pi) times the squared first eigenvector components.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double off = std::sqrt(0.5 * k);
    jacobi(k, k - 1) = off;
    jacobi(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("gauss-hermite: eigensolve failed");
  }
  nodes.resize(order);
  weights.resize(order);
  const double mu0 = std::sqrt(M_PI);
  for (int i = 0; i < order; ++i) {
    nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = mu0 * v0 * v0;
  }
}

ExpectedLogGrid::ExpectedLogGrid(int order) : order_(order) {
  if (order < 4) throw std::invalid_argument("expected-log grid: order must be >= 4");
  const GaussHermite gh(order);
  const int half = order / 2;
  const bool odd = (order % 2) != 0;

  // Enforce the exact +-x symmetry the pair folding assumes; the eigensolve
  // is symmetric only to rounding.
  std::vector<double> xpos(half), wpos(half);
  for (int i = 0; i < half; ++i) {
    xpos[i] = 0.5 * (gh.nodes[order - 1 - i] - gh.nodes[i]);
    wpos[i] = 0.5 * (gh.weights[order - 1 - i] + gh.weights[i]);
  }
  const double w_mid = odd ? gh.weights[half] : 0.0;

  const double inv_pi = 1.0 / M_PI;
  // The integrand depends on y only through y^2, so +-y fold as well:
  // (x>0, y>0) carries twice the tensor weight.
  for (int i = 0; i < half; ++i) {
    for (int j = 0; j < half; ++j) {
      pair_w_.push_back(2.0 * wpos[i] * wpos[j] * inv_pi);
      pair_sumsq_.push_back(xpos[i] * xpos[i] + xpos[j] * xpos[j]);
      pair_xsq_.push_back(xpos[i] * xpos[i]);
    }
    if (odd) {  // y = 0 row
      pair_w_.push_back(wpos[i] * w_mid * inv_pi);
      pair_sumsq_.push_back(xpos[i] * xpos[i]);
      pair_xsq_.push_back(xpos[i] * xpos[i]);
    }
  }
  if (odd) {  // x = 0 column has no cross term, so it stays a plain log
    for (int j = 0; j < half; ++j) {
      axis_w_.push_back(2.0 * w_mid * wpos[j] * inv_pi);
      axis_ysq_.push_back(xpos[j] * xpos[j]);
    }
    axis_w_.push_back(w_mid * w_mid * inv_pi);
    axis_ysq_.push_back(0.0);
  }

  // Each pair entry stands for two +-x nodes; normalize total mass to 1 so
  // a constant integrand is reproduced exactly.
  double total = 0.0;
  for (double w : pair_w_) total += 2.0 * w;
  for (double w : axis_w_) total += w;
  weight_sum_ = total;
  for (double& w : pair_w_) w /= total;
  for (double& w : axis_w_) w /= total;
}

namespace {

void check_domain(double los, double scatter, double pt_power, double noise) {
  if (!(noise > 0.0)) {
    throw std::invalid_argument("expected-log: noise power must be positive");
  }
  if (!(los >= 0.0) || !(scatter >= 0.0) || !(pt_power >= 0.0)) {
    throw std::invalid_argument("expected-log: gains and power must be nonnegative");
  }
}

}  // namespace

double ExpectedLogGrid::value(double los_gain, double scatter_gain, double pt_power,
                              double noise_var) const {
  check_domain(los_gain, scatter_gain, pt_power, noise_var);
  if (pt_power == 0.0) return 0.0;
  const double A = noise_var + pt_power * los_gain;
  if (scatter_gain == 0.0) return std::log2(A / noise_var);

  const double s = scatter_gain;
  double acc = 0.0;
  const std::size_t np = pair_w_.size();
  for (std::size_t k = 0; k < np; ++k) {
    const double C = pt_power * pair_sumsq_[k];
    const double Bsq = 4.0 * pt_power * pt_power * los_gain * pair_xsq_[k];
    const double g = A + C * s;
    acc += pair_w_[k] * std::log(g * g - Bsq * s);
  }
  for (std::size_t k = 0; k < axis_w_.size(); ++k) {
    acc += axis_w_[k] * std::log(A + pt_power * axis_ysq_[k] * s);
  }
  return (acc - std::log(noise_var)) / M_LN2;
}

ExpectedLogGrid::Eval ExpectedLogGrid::eval(double los_gain, double scatter_gain,
                                            double pt_power, double noise_var) const {
  check_domain(los_gain, scatter_gain, pt_power, noise_var);
  Eval out;
  if (pt_power == 0.0) return out;
  const double P = pt_power;
  const double A = noise_var + P * los_gain;
  if (scatter_gain == 0.0) {
    // Closed form: the scattered field contributes nothing, and the first
    // two s-derivatives reduce to fourth-order Gaussian moments.
    out.value = std::log2(A / noise_var);
    out.d1 = P * noise_var / (A * A * M_LN2);
    out.d2 = 2.0 * P * P * noise_var * (2.0 * P * los_gain - noise_var) /
             (A * A * A * A * M_LN2);
    return out;
  }

  const double s = scatter_gain;
  double acc_v = 0.0, acc_d1 = 0.0, acc_d2 = 0.0;
  const std::size_t np = pair_w_.size();
  for (std::size_t k = 0; k < np; ++k) {
    const double C = P * pair_sumsq_[k];
    const double Bsq = 4.0 * P * P * los_gain * pair_xsq_[k];
    const double g = A + C * s;
    // prod = (A+Cs)^2 - B^2 s >= noise^2: it factors as the product of the
    // two +-x node arguments, each >= noise_var.
    const double prod = g * g - Bsq * s;
    const double dprod = 2.0 * C * g - Bsq;
    const double w = pair_w_[k];
    acc_v += w * std::log(prod);
    acc_d1 += w * dprod / prod;
    acc_d2 += w * (2.0 * C * C * prod - dprod * dprod) / (prod * prod);
  }
  for (std::size_t k = 0; k < axis_w_.size(); ++k) {
    const double C = P * axis_ysq_[k];
    const double g = A + C * s;
    const double w = axis_w_[k];
    acc_v += w * std::log(g);
    acc_d1 += w * C / g;
    acc_d2 -= w * C * C / (g * g);
  }
  out.value = (acc_v - std::log(noise_var)) / M_LN2;
  out.d1 = acc_d1 / M_LN2;
  out.d2 = acc_d2 / M_LN2;
  return out;
}

std::shared_ptr<const ExpectedLogGrid> quadrature_grid(int order) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const ExpectedLogGrid>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;
  auto grid = std::make_shared<const ExpectedLogGrid>(order);
  cache.emplace(order, grid);
  return grid;
}

}  // namespace srhapc
