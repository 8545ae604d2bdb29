#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace fracvar::quad {

/// Nodes and weights of a rule on a reference interval.
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const noexcept { return nodes.size(); }
};

/// Gauss-Legendre rule on [0, 1].
const Rule& gauss_legendre(std::size_t points);

/// Gauss-Jacobi rule on [0, 1] for the weight s^exponent (exponent > -1):
/// sum w_i g(s_i) approximates the integral of g(s) s^exponent over [0, 1].
/// Computed by Golub-Welsch; results are cached per (points, exponent).
const Rule& gauss_jacobi_left(std::size_t points, double exponent);

/// Integral of g over [a, b] with an n-point Gauss-Legendre rule.
double integrate(const std::function<double(double)>& g, double a, double b,
                 std::size_t points);

/// Integral of g(x) over [a, b] on a composite Gauss-Legendre rule with
/// `panels` equal panels.
double integrate_composite(const std::function<double(double)>& g, double a, double b,
                           std::size_t panels, std::size_t points);

}  // namespace fracvar::quad
