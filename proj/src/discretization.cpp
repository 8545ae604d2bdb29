#include "fracvar/discretization.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "fracvar/quadrature.hpp"

namespace fracvar {
namespace {

double abs2(double x) { return x * x; }
double abs2(const std::complex<double>& x) { return std::norm(x); }
double conj(double x) { return x; }
std::complex<double> conj(const std::complex<double>& x) { return std::conj(x); }

}  // namespace

P1Space::P1Space(GridPtr grid) : grid_(std::move(grid)) {
  if (grid_->intervals() < 2) throw DomainError("P1 space needs at least one interior node");
}

GridFunction P1Space::expand(std::span<const double> coefficients) const {
  if (coefficients.size() != dof_count()) throw DataError("P1Space::expand: wrong coefficient count");
  GridFunction v(grid_);
  for (std::size_t i = 0; i < coefficients.size(); ++i) v[i + 1] = coefficients[i];
  return v;
}

std::vector<double> P1Space::restrict(const GridFunction& v) const {
  if (v.size() != grid_->node_count()) throw DataError("P1Space::restrict: grid size mismatch");
  return {v.values().begin() + 1, v.values().end() - 1};
}

CoefficientField CoefficientField::sampled(ScalarField a, ScalarField p, const RayGrid& grid,
                                           double lipschitz_lambda) {
  CoefficientField c;
  c.a0 = std::numeric_limits<double>::infinity();
  c.p0 = std::numeric_limits<double>::infinity();
  c.a_sup = -std::numeric_limits<double>::infinity();
  c.p_sup = -std::numeric_limits<double>::infinity();
  const quad::Rule& rule = quad::gauss_legendre(kCoefficientGaussPoints);
  auto sample = [&](double x) {
    const double av = a(x);
    const double pv = p(x);
    if (!std::isfinite(av) || !std::isfinite(pv)) {
      std::ostringstream msg;
      msg << "coefficient field is not finite at x = " << x;
      throw DataError(msg.str());
    }
    c.a0 = std::min(c.a0, av);
    c.p0 = std::min(c.p0, pv);
    c.a_sup = std::max(c.a_sup, std::abs(av));
    c.p_sup = std::max(c.p_sup, std::abs(pv));
  };
  for (std::size_t i = 0; i < grid.node_count(); ++i) sample(grid.node(i));
  for (std::size_t k = 0; k < grid.intervals(); ++k)
    for (double q : rule.nodes) sample(grid.node(k) + q * grid.spacing(k));
  if (!(c.a0 > 0.0)) {
    std::ostringstream msg;
    msg << "coefficient a violates ellipticity: min a = " << c.a0 << " <= 0";
    throw EllipticityError(msg.str());
  }
  if (c.p0 < 0.0) {
    std::ostringstream msg;
    msg << "coefficient p must be nonnegative: min p = " << c.p0;
    throw EllipticityError(msg.str());
  }
  c.a = std::move(a);
  c.p = std::move(p);
  c.lipschitz_lambda = lipschitz_lambda;
  return c;
}

CoefficientField CoefficientField::constant(double a, double p, double lipschitz_lambda) {
  if (!(a > 0.0)) throw EllipticityError("coefficient a violates ellipticity: a <= 0");
  if (p < 0.0) throw EllipticityError("coefficient p must be nonnegative");
  CoefficientField c;
  c.a = [a](double) { return a; };
  c.p = [p](double) { return p; };
  c.a_prime = [](double) { return 0.0; };
  c.a0 = c.a_sup = a;
  c.p0 = c.p_sup = p;
  c.lipschitz_lambda = lipschitz_lambda;
  return c;
}

void CoefficientField::require_holder_exponent(double alpha) const {
  if (!(lipschitz_lambda > alpha && lipschitz_lambda <= 1.0)) {
    std::ostringstream msg;
    msg << "Lipschitz exponent lambda = " << lipschitz_lambda << " must satisfy alpha = " << alpha
        << " < lambda <= 1";
    throw DomainError(msg.str());
  }
}

double holder_quotient(const ScalarField& p, const RayGrid& grid, double lambda) {
  const std::size_t n = grid.node_count();
  std::vector<double> pv(n);
  for (std::size_t i = 0; i < n; ++i) pv[i] = p(grid.node(i));
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      worst = std::max(worst, std::abs(pv[j] - pv[i]) / std::pow(grid.node(j) - grid.node(i), lambda));
  return worst;
}

template <class T>
Norms norms(const BasicGridFunction<T>& v, const CoefficientField* coeffs) {
  const RayGrid& g = v.grid();
  double l2 = 0.0;
  double semi = 0.0;
  double weighted = 0.0;
  const quad::Rule& rule = quad::gauss_legendre(kCoefficientGaussPoints);
  for (std::size_t k = 0; k < g.intervals(); ++k) {
    const double h = g.spacing(k);
    const T a = v[k];
    const T b = v[k + 1];
    // int_e |a(1-w) + b w|^2 = h/3 (|a|^2 + Re(a conj b) + |b|^2)
    l2 += h / 3.0 * (abs2(a) + std::real(a * conj(b)) + abs2(b));
    semi += abs2(b - a) / h;
    if (coeffs != nullptr) {
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double w = rule.nodes[q];
        weighted += rule.weights[q] * h * coeffs->p(g.node(k) + w * h) * abs2(a * (1.0 - w) + b * w);
      }
    }
  }
  Norms out;
  out.l2 = std::sqrt(l2);
  out.h1_semi = std::sqrt(semi);
  out.h1 = std::sqrt(l2 + semi);
  out.weighted_l2 = std::sqrt(weighted);
  return out;
}

template <class T>
T lumped_inner(const BasicGridFunction<T>& v, const BasicGridFunction<T>& u) {
  const RayGrid& g = v.grid();
  if (u.size() != v.size()) throw DataError("lumped_inner: grid size mismatch");
  T sum{};
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const double w = 0.5 * ((i > 0 ? g.spacing(i - 1) : 0.0) + (i < g.intervals() ? g.spacing(i) : 0.0));
    sum += w * v[i] * conj(u[i]);
  }
  return sum;
}

DifferenceStep::DifferenceStep(double h_, bool interpolate_) : h(h_), interpolate(interpolate_) {
  if (h == 0.0 || !std::isfinite(h)) throw DomainError("difference step h must be nonzero and finite");
}

template <class T>
BasicGridFunction<T> difference_quotient(const BasicGridFunction<T>& v, const DifferenceStep& step) {
  const RayGrid& g = v.grid();
  const double d = g.length();
  const double tol = 1e-9 * g.min_spacing();
  BasicGridFunction<T> out(v.grid_ptr());
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const double target = g.node(i) + step.h;
    T shifted{};
    if (target >= -tol && target <= d + tol) {
      const std::size_t k = g.locate(target);
      std::size_t node = k;
      if (std::abs(g.node(k + 1) - target) < std::abs(g.node(k) - target)) node = k + 1;
      if (std::abs(g.node(node) - target) <= tol) {
        shifted = v[node];
      } else if (step.interpolate) {
        shifted = v.at(target);
      } else {
        std::ostringstream msg;
        msg << "difference_quotient: shift h = " << step.h << " from node " << g.node(i)
            << " misses the grid; request interpolation mode";
        throw DomainError(msg.str());
      }
    }
    out[i] = (shifted - v[i]) / step.h;
  }
  return out;
}

template <class T>
double support_margin(const BasicGridFunction<T>& v) {
  const RayGrid& g = v.grid();
  std::size_t first = g.node_count();
  std::size_t last = 0;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    if (v[i] != T{}) {
      first = std::min(first, i);
      last = i;
    }
  }
  if (first == g.node_count()) return std::numeric_limits<double>::infinity();
  const double lo = first == 0 ? 0.0 : g.node(first - 1);
  const double hi = last + 1 >= g.node_count() ? g.length() : g.node(last + 1);
  return std::min(lo, g.length() - hi);
}

template Norms norms(const BasicGridFunction<double>&, const CoefficientField*);
template Norms norms(const BasicGridFunction<std::complex<double>>&, const CoefficientField*);
template double lumped_inner(const BasicGridFunction<double>&, const BasicGridFunction<double>&);
template std::complex<double> lumped_inner(const BasicGridFunction<std::complex<double>>&,
                                           const BasicGridFunction<std::complex<double>>&);
template BasicGridFunction<double> difference_quotient(const BasicGridFunction<double>&,
                                                       const DifferenceStep&);
template BasicGridFunction<std::complex<double>> difference_quotient(
    const BasicGridFunction<std::complex<double>>&, const DifferenceStep&);
template double support_margin(const BasicGridFunction<double>&);
template double support_margin(const BasicGridFunction<std::complex<double>>&);

}  // namespace fracvar
