#pragma once

// Galerkin discretization of B(v, u) = int a v' u' + (D^alpha_{d-} p v) u on
// the P1 space with homogeneous Dirichlet conditions. The fractional block is
// assembled through the adjoint form int p v D^alpha u, with D^alpha the
// Kipriyanov derivative of the basis functions.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fracvar/discretization.hpp"
#include "fracvar/exec.hpp"
#include "fracvar/frac_ops.hpp"

namespace fracvar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ProblemSpec {
  double d = 1.0;
  FractionalOrder alpha{0.5};
  int n = 1;
  CoefficientField coeffs;
  ScalarField rhs;
};

/// Matrices over the interior degrees of freedom. Row index = test function.
struct AssembledForm {
  Matrix diffusion;
  Matrix fractional;
  Matrix gram_l2;
  Matrix gram_h10;
  Matrix gram_weighted;
  double a0 = 0.0;
  double p0 = 0.0;
  double a_sup = 0.0;

  Matrix system() const { return diffusion + fractional; }
};

struct LaxMilgramCertificate {
  double k1_estimate = 0.0;
  double k2_estimate = 0.0;
  double k2_predicted = 0.0;
  double accretivity_margin = 0.0;
  double lambda_used = 0.0;
};

/// A_ij = int a phi_i' phi_j' with 3-point Gauss per element.
Matrix assemble_diffusion(const P1Space& space, const CoefficientField& coeffs);

/// F_ij = int p phi_i D^alpha phi_j (Kipriyanov derivative, dimension n).
/// Columns are independent and run in parallel under Exec::parallel.
Matrix assemble_fractional(const P1Space& space, const CoefficientField& coeffs,
                           FractionalOrder alpha, int n, Exec exec = default_exec);

/// Exact P1 mass matrix int phi_i phi_j.
Matrix assemble_mass(const P1Space& space);

/// int p phi_i phi_j, 3-point Gauss.
Matrix assemble_weighted_mass(const P1Space& space, const CoefficientField& coeffs);

AssembledForm assemble(const P1Space& space, const CoefficientField& coeffs,
                       FractionalOrder alpha, int n, Exec exec = default_exec);

/// Load vector int f phi_i with a 5-point Gauss rule per element.
Vector assemble_load(const P1Space& space, const ScalarField& f);

/// Discrete Friedrichs constant: max ||v||_{L2} / ||v'||_{L2} over the space.
double friedrichs_constant(const P1Space& space);

/// Eigen-estimates of the Lax-Milgram constants in the H^1_0 metric.
/// lambda_used defaults to the discrete Friedrichs constant.
LaxMilgramCertificate certify_lax_milgram(const AssembledForm& form,
                                          std::optional<double> lambda_used = std::nullopt);

struct SolveOptions {
  Exec exec = default_exec;
  MeshOptions mesh{};
  bool certify = true;
  std::optional<double> lambda_used;
};

struct BvpSolution {
  GridFunction solution;
  Vector coefficients;
  Vector load;
  AssembledForm form;
  std::optional<LaxMilgramCertificate> certificate;
  /// max_i |B(phi_i, z) - (phi_i, f)|
  double residual = 0.0;
  /// Reference magnitude for the residual: max(|b|_inf, |K|_inf |z|_inf).
  double residual_scale = 0.0;
};

/// Generalized solution z with B(phi_i, z) = (phi_i, f) for every interior
/// hat function. Throws SolvabilityError on a numerically singular system.
BvpSolution solve_bvp(const ProblemSpec& spec, std::size_t intervals, const SolveOptions& options = {});

/// Solves with an already assembled form.
BvpSolution solve_assembled(const P1Space& space, AssembledForm form, Vector load);

struct RegularityReport {
  std::vector<double> h_values;
  std::vector<double> quotient_norms;
  double bound_reference = 0.0;
  std::vector<double> ratios;
};

struct ProbeOptions {
  /// Interior subdomain [lo * d, hi * d].
  double lo = 0.2;
  double hi = 0.8;
};

/// Difference quotients of the derivative of a P1 solution on an interior
/// subdomain, normalized by ||z||_{H^1} + ||f||_{L2}. Each h must be a
/// positive multiple of the (uniform) grid spacing with 2h below the
/// distance from the subdomain to the boundary.
RegularityReport h2_probe(const GridFunction& z, const GridFunction& f,
                          const std::vector<double>& h_list, const ProbeOptions& options = {});

/// Writes "row col value" lines (0-based) for every nonzero entry.
void write_coordinate(std::ostream& out, const Matrix& m);

}  // namespace fracvar
