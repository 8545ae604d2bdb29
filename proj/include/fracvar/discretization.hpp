#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include "fracvar/grid.hpp"

namespace fracvar {

/// Continuous P1 space on a ray grid with homogeneous Dirichlet conditions:
/// the degrees of freedom are the interior nodes 1..N-1.
class P1Space {
 public:
  explicit P1Space(GridPtr grid);

  const RayGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  std::size_t dof_count() const noexcept { return grid_->intervals() - 1; }

  /// Interior coefficients -> grid function with zero boundary values.
  GridFunction expand(std::span<const double> coefficients) const;
  /// Interior values of a grid function.
  std::vector<double> restrict(const GridFunction& v) const;

 private:
  GridPtr grid_;
};

/// Diffusion coefficient a and lower-order weight p of the operator
/// -(a u')' + p D^alpha u, with sampled lower bounds.
struct CoefficientField {
  ScalarField a;
  ScalarField p;
  /// Optional derivative of a; needed only where (a u')' is formed
  /// pointwise (manufactured right-hand sides, Green's formula checks).
  ScalarField a_prime;
  double a0 = 0.0;
  double p0 = 0.0;
  double a_sup = 0.0;
  double p_sup = 0.0;
  double lipschitz_lambda = 1.0;

  /// Samples a and p at the nodes and at the three Gauss points of every
  /// element and records min/max. Throws EllipticityError when a <= 0 or
  /// p < 0 somewhere (p = 0 switches the fractional term off).
  static CoefficientField sampled(ScalarField a, ScalarField p, const RayGrid& grid,
                                  double lipschitz_lambda = 1.0);

  static CoefficientField constant(double a, double p, double lipschitz_lambda = 1.0);

  /// Checks lipschitz_lambda in (alpha, 1].
  void require_holder_exponent(double alpha) const;
};

/// Gauss points (3 per element) used for coefficient integrals.
inline constexpr std::size_t kCoefficientGaussPoints = 3;

/// max over node pairs of |p(x) - p(y)| / |x - y|^lambda.
double holder_quotient(const ScalarField& p, const RayGrid& grid, double lambda);

struct Norms {
  double l2 = 0.0;
  double h1_semi = 0.0;
  double h1 = 0.0;
  double weighted_l2 = 0.0;
};

/// Exact L2 and H1 norms of the P1 interpolant; weighted_l2^2 = int p |v|^2
/// by 3-point Gauss quadrature (left 0 without a coefficient field).
template <class T>
Norms norms(const BasicGridFunction<T>& v, const CoefficientField* coeffs = nullptr);

/// Discrete L2 inner product (lumped trapezoid weights) sum w_i v_i conj(u_i).
template <class T>
T lumped_inner(const BasicGridFunction<T>& v, const BasicGridFunction<T>& u);

/// Step of the difference quotient [v(x + h) - v(x)] / h.
struct DifferenceStep {
  explicit DifferenceStep(double h, bool interpolate = false);

  double h;
  /// Evaluate v(x + h) on the P1 interpolant instead of requiring x + h to
  /// land on a node.
  bool interpolate;
};

/// Forward difference quotient at every node with zero extension outside
/// [0, d]. Without interpolation every shifted node must coincide with a
/// grid node (DomainError otherwise).
template <class T>
BasicGridFunction<T> difference_quotient(const BasicGridFunction<T>& v, const DifferenceStep& step);

/// Distance from the support of the P1 interpolant of v to {0, d}; +inf for v = 0.
template <class T>
double support_margin(const BasicGridFunction<T>& v);

}  // namespace fracvar
