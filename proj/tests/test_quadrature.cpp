#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <srhapc/quadrature.hpp>

#include <cmath>
#include <random>
#include <stdexcept>

using namespace srhapc;

namespace {

double rel(double got, double want) {
  return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

constexpr double kSqrtPi = 1.7724538509055160273;

}  // namespace

TEST_CASE("gauss-hermite rules reproduce gaussian moments") {
  for (int order : {4, 5, 16, 33, 64, 192}) {
    const GaussHermite gh(order);
    REQUIRE(static_cast<int>(gh.nodes.size()) == order);
    REQUIRE(gh.weights.size() == gh.nodes.size());
    double m0 = 0.0, m1 = 0.0, m2 = 0.0, m4 = 0.0;
    for (int k = 0; k < order; ++k) {
      const double x = gh.nodes[k];
      const double w = gh.weights[k];
      m0 += w;
      m1 += w * x;
      m2 += w * x * x;
      m4 += w * x * x * x * x;
    }
    // int e^{-x^2} x^p dx: sqrt(pi), 0, sqrt(pi)/2, 3 sqrt(pi)/4
    CHECK(rel(m0, kSqrtPi) < 1e-12);
    CHECK(std::abs(m1) < 1e-12);
    CHECK(rel(m2, kSqrtPi / 2.0) < 1e-12);
    CHECK(rel(m4, 3.0 * kSqrtPi / 4.0) < 1e-12);
  }
}

TEST_CASE("grid rejects tiny orders") {
  CHECK_THROWS_AS(ExpectedLogGrid(3), std::invalid_argument);
  CHECK_NOTHROW(ExpectedLogGrid(4));
}

TEST_CASE("zero scatter gain reduces to the closed form") {
  const ExpectedLogGrid grid(64);
  for (double b : {1e-8, 1e-7, 1e-6}) {
    for (double p : {0.5, 1.0, 2.0}) {
      const double want = std::log2(1.0 + p * b / 1e-8);
      CHECK(rel(grid.value(b, 0.0, p, 1e-8), want) < 1e-12);
    }
  }
  CHECK(grid.value(1e-7, 1.4e-6, 0.0, 1e-8) == 0.0);
}

TEST_CASE("expectation matches a monte carlo oracle within 3 standard errors") {
  const ExpectedLogGrid grid(192);
  const double b = 1e-7, s = 1.4e-6, P = 1.0, sig2 = 1e-8;
  const double got = grid.value(b, s, P, sig2);

  std::mt19937_64 rng(12345);
  std::normal_distribution<double> half(0.0, std::sqrt(0.5));
  const int n = 1'000'000;
  double sum = 0.0, sumsq = 0.0;
  for (int k = 0; k < n; ++k) {
    const double re = half(rng), im = half(rng);
    const double amp = (std::sqrt(b) + std::sqrt(s) * re) * (std::sqrt(b) + std::sqrt(s) * re) +
                       s * im * im;
    const double v = std::log2(1.0 + P * amp / sig2);
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / n;
  const double stderr_mc = std::sqrt((sumsq / n - mean * mean) / n);
  CHECK(std::abs(got - mean) < 3.0 * stderr_mc);

  // adaptive double-integral reference (mpmath, 30 digits); the fixed
  // tensor grid carries ~1e-4 truncation error at this SNR
  CHECK(rel(got, 6.4501401031099913) < 5e-4);
}

TEST_CASE("value is monotone in the scatter gain") {
  const ExpectedLogGrid grid(96);
  double prev = grid.value(1e-7, 0.0, 1.0, 1e-8);
  for (double s = 1e-9; s < 1e-4; s *= 3.0) {
    const double v = grid.value(1e-7, s, 1.0, 1e-8);
    CHECK(v >= prev - 1e-12);
    prev = v;
  }
}

TEST_CASE("analytic scatter derivatives match finite differences") {
  const ExpectedLogGrid grid(64);
  const double b = 1e-7, P = 1.0, sig2 = 1e-8;
  for (double s : {1e-8, 1e-7, 5e-7, 1.4e-6, 1e-5}) {
    const auto e = grid.eval(b, s, P, sig2);
    CHECK(rel(e.value, grid.value(b, s, P, sig2)) < 1e-15);
    const double h = 1e-4 * s;
    const double fd1 = (grid.value(b, s + h, P, sig2) - grid.value(b, s - h, P, sig2)) / (2 * h);
    const double fd2 = (grid.value(b, s + h, P, sig2) - 2 * e.value +
                        grid.value(b, s - h, P, sig2)) /
                       (h * h);
    CHECK(rel(e.d1, fd1) < 1e-6);
    CHECK(rel(e.d2, fd2) < 1e-4);
    CHECK(e.d1 > 0.0);  // more scatter power, higher expected rate
  }
}

TEST_CASE("scaling power and noise together leaves the value unchanged") {
  const ExpectedLogGrid grid(64);
  for (double s : {0.0, 1e-7, 1.4e-6}) {
    const double v1 = grid.value(1e-7, s, 1.0, 1e-8);
    const double v2 = grid.value(1e-7, s, 2.0, 2e-8);
    CHECK(rel(v1, v2) < 1e-14);
  }
}

TEST_CASE("grid cache returns one instance per order") {
  const auto g1 = quadrature_grid(48);
  const auto g2 = quadrature_grid(48);
  CHECK(g1.get() == g2.get());
  CHECK(g1->order() == 48);
  const auto g3 = quadrature_grid(56);
  CHECK(g3.get() != g1.get());
}
