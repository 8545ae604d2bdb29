#include "fracvar/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <utility>

#include <Eigen/Eigenvalues>

#include "fracvar/errors.hpp"

namespace fracvar::quad {
namespace {

// Golub-Welsch for the Jacobi weight (1-x)^a (1+x)^b on [-1, 1], mapped to
// [0, 1] with s = (1 + x) / 2. The returned weights absorb the factor
// 2^{-(a+b+1)} so that sum w_i g(s_i) ~ int_0^1 g(s) (1-s)^a s^b ds.
Rule jacobi_rule(std::size_t n, double a, double b) {
  if (n == 0) throw DomainError("quadrature rule needs at least one node");
  if (!(a > -1.0) || !(b > -1.0)) throw DomainError("Jacobi exponents must exceed -1");
  const double ab = a + b;
  Eigen::VectorXd diag(static_cast<Eigen::Index>(n));
  Eigen::VectorXd off(n > 1 ? static_cast<Eigen::Index>(n - 1) : 0);
  for (std::size_t k = 0; k < n; ++k) {
    const double kk = static_cast<double>(k);
    if (k == 0) {
      diag(0) = (b - a) / (ab + 2.0);
    } else {
      diag(static_cast<Eigen::Index>(k)) =
          (b * b - a * a) / ((2.0 * kk + ab) * (2.0 * kk + ab + 2.0));
    }
    if (k >= 1) {
      const double t = 2.0 * kk + ab;
      const double beta = 4.0 * kk * (kk + a) * (kk + b) * (kk + ab) /
                          (t * t * (t + 1.0) * (t - 1.0));
      off(static_cast<Eigen::Index>(k - 1)) = std::sqrt(beta);
    }
  }
  const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) +
                              std::lgamma(b + 1.0) - std::lgamma(ab + 2.0));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw ConsistencyError("Golub-Welsch eigensolve failed");

  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double scale = std::pow(0.5, ab + 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double v0 = solver.eigenvectors()(0, ii);
    rule.nodes[i] = 0.5 * (1.0 + solver.eigenvalues()(ii));
    rule.weights[i] = mu0 * v0 * v0 * scale;
  }
  return rule;
}

std::mutex cache_mutex;

}  // namespace

const Rule& gauss_legendre(std::size_t points) {
  static std::map<std::size_t, Rule> cache;
  std::lock_guard lock(cache_mutex);
  auto it = cache.find(points);
  if (it == cache.end()) it = cache.emplace(points, jacobi_rule(points, 0.0, 0.0)).first;
  return it->second;
}

const Rule& gauss_jacobi_left(std::size_t points, double exponent) {
  static std::map<std::pair<std::size_t, double>, Rule> cache;
  std::lock_guard lock(cache_mutex);
  const auto key = std::make_pair(points, exponent);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, jacobi_rule(points, 0.0, exponent)).first;
  return it->second;
}

double integrate(const std::function<double(double)>& g, double a, double b,
                 std::size_t points) {
  const Rule& rule = gauss_legendre(points);
  const double h = b - a;
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) sum += rule.weights[i] * g(a + h * rule.nodes[i]);
  return sum * h;
}

double integrate_composite(const std::function<double(double)>& g, double a, double b,
                           std::size_t panels, std::size_t points) {
  const double h = (b - a) / static_cast<double>(panels);
  double sum = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + h * static_cast<double>(p);
    sum += integrate(g, lo, p + 1 == panels ? b : lo + h, points);
  }
  return sum;
}

}  // namespace fracvar::quad
