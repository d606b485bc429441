#pragma once

#include <memory>
#include <vector>

namespace srhapc {

/// Physicists' Gauss-Hermite rule: sum_k w_k f(x_k) ~ int f(x) e^{-x^2} dx.
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
  explicit GaussHermite(int order);
};

/// Tensor-product Gauss-Hermite evaluator for the backscatter expectation
///
///   Phi(s) = E_c[ log2(1 + P (b + 2 sqrt(b s) Re c + s |c|^2) / sigma^2) ],
///
/// c standard circularly-symmetric complex Gaussian, s the scatter power
/// gain. Nodes with +-x are folded into a single term
/// log2(((A + C s)^2 - B^2 s)/sigma^4), A = sigma^2 + P b, which removes the
/// sqrt(s) cusp at s = 0 and makes d/ds and d^2/ds^2 closed-form.
class ExpectedLogGrid {
 public:
  /// Throws std::invalid_argument when order < 4.
  explicit ExpectedLogGrid(int order);

  struct Eval {
    double value = 0.0;  // bits/symbol
    double d1 = 0.0;     // d value / d s
    double d2 = 0.0;     // d^2 value / d s^2
  };

  double value(double los_gain, double scatter_gain, double pt_power,
               double noise_var) const;
  Eval eval(double los_gain, double scatter_gain, double pt_power,
            double noise_var) const;
  int order() const { return order_; }

 private:
  int order_;
  // folded +-x pairs crossed with all y nodes
  std::vector<double> pair_w_;      // w_x * w_y / pi
  std::vector<double> pair_sumsq_;  // x^2 + y^2
  std::vector<double> pair_xsq_;    // x^2
  // x = 0 column (odd orders only)
  std::vector<double> axis_w_;
  std::vector<double> axis_ysq_;
  double weight_sum_ = 0.0;
};

/// Process-wide cache of grids keyed by order (grid setup is O(order^2)).
std::shared_ptr<const ExpectedLogGrid> quadrature_grid(int order);

}  // namespace srhapc
