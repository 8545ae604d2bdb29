#pragma once

// Independent reference computations and property-test drivers. The oracles
// integrate the operator definitions directly on callables with adaptive
// scalar quadrature; they never touch the grid pipeline in frac_ops, so an
// agreement between the two is evidence rather than a tautology.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fracvar/discretization.hpp"
#include "fracvar/frac_ops.hpp"
#include "fracvar/variational.hpp"

namespace fracvar::verify {

enum class OracleOperator {
  marchaud_right,   // limit eps -> 0 of the right truncated family
  kipriyanov_left,  // weighted left derivative, dimension n
  integral_right,   // right Riemann-Liouville integral
  psi_minus,        // truncated family psi^-_eps itself
};

struct OracleSpec {
  OracleOperator op = OracleOperator::marchaud_right;
  double d = 1.0;
  int n = 1;
  double epsilon = 0.0;  // psi_minus only
  /// Two successive resolutions must agree to tolerance * max(1, |value|).
  double tolerance = 1e-9;
  /// Hard cap on integrand evaluations per point.
  std::size_t max_points = std::size_t{1} << 20;
};

/// Reference values of the chosen operator at each point. `resolution` is
/// the initial number of uniform panels; it doubles until two successive
/// values agree. Throws OracleError when the cap is reached first.
std::vector<double> oracle_derivative(const ScalarField& f, FractionalOrder alpha,
                                      const std::vector<double>& points, std::size_t resolution,
                                      const OracleSpec& spec = {});

/// u together with its first two derivatives.
struct SmoothFunction {
  ScalarField value;
  ScalarField d1;
  ScalarField d2;
};

struct IdentityResidual {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

IdentityResidual make_residual(std::string name, double residual, double tolerance);

/// |<D^h v, u> + <v, D^{-h} u>| in the lumped discrete L2 pairing. The
/// support of v must keep a distance larger than 2|h| from both endpoints
/// (DomainError otherwise). Tolerance 1e-12 times the sum of the absolute
/// terms of both pairings.
IdentityResidual sbp_test(const GridFunction& v, const GridFunction& u, const DifferenceStep& step);

/// -int v (a u')' against int a v' u' with `points`-point Gauss quadrature
/// per element (midpoint by default, which makes the residual O(h^2) for
/// smooth u). coeffs.a_prime must be set.
IdentityResidual greens_test(const SmoothFunction& u, const GridFunction& v,
                             const CoefficientField& coeffs, double tolerance,
                             std::size_t points = 1);

struct ConvergenceRow {
  std::size_t n = 0;
  double l2_error = 0.0;
  double h1_error = 0.0;   // NaN when not measured
  double reference = 0.0;  // norm of the target, for relative errors
  double l2_rate = 0.0;    // NaN on the first row
  double h1_rate = 0.0;
};

struct ConvergenceTable {
  std::string name;
  std::vector<ConvergenceRow> rows;

  /// Observed order of the last pair of rows.
  double last_l2_rate() const;
  double last_h1_rate() const;
  double min_l2_rate() const;
  /// Least-squares slope of log error against log N over all rows.
  double fitted_l2_rate() const;
  double fitted_h1_rate() const;
};

struct CoincidenceOptions {
  double d = 1.0;
  MarchaudLimitOptions limit{};
  Exec exec = default_exec;
};

/// For each N: f = I^alpha_{d-} phi on the grid, then the eps-limit of the
/// truncated Marchaud derivative of f compared with phi in L2.
ConvergenceTable coincidence_test(const ScalarField& phi, FractionalOrder alpha,
                                  const std::vector<std::size_t>& n_list,
                                  const CoincidenceOptions& options = {});

struct ScanRecord {
  std::size_t function_index = 0;
  double delta = 0.0;
  double lhs = 0.0;
  double rhs_without_k = 0.0;
  double l2 = 0.0;
  double ratio = 0.0;
};

struct ScanReport {
  double alpha = 0.0;
  double beta = 0.0;
  double q_exponent = 0.0;
  double nu = 0.0;
  std::vector<double> delta_grid;
  double fitted_k = 0.0;
  double worst_ratio = 0.0;
  /// alpha < 1/2 + 1/q (the alpha-range of the mapping for l = 1, p = 2).
  bool satisfies_mapping_range = false;
  /// q < 2/(2 alpha - 1) for alpha > 1/2; vacuous otherwise.
  bool satisfies_window = false;
  std::uint64_t seed = 0;
  std::size_t family_size = 0;
  std::vector<ScanRecord> records;
};

/// Seeded random sine series sum_k c_k sin(k pi x / d) / k^2, k = 1..modes.
std::vector<GridFunction> random_h10_family(const GridPtr& grid, std::size_t count,
                                            std::uint64_t seed, std::size_t modes = 8);

/// Empirical constant of ||D^alpha f||_q <= K d^{-nu} ||f||_2 + d^{1-nu} |f|_1.
/// q must exceed 2 and every delta lie in (0, 1); nu outside (0, 1) is a
/// ConfigError.
ScanReport embedding_scan(const std::vector<GridFunction>& family, FractionalOrder alpha, double q,
                          double beta, const std::vector<double>& delta_grid,
                          Exec exec = default_exec);

struct ManufacturedOptions {
  SolveOptions solve{};
  /// Initial oracle panels for the right-hand side.
  std::size_t oracle_resolution = 32;
};

/// Builds f = -(a z')' + p D^alpha z from the oracle, solves at every N and
/// tabulates L2 and H1 errors (5-point Gauss per element).
ConvergenceTable manufactured_convergence(const ProblemSpec& spec_template, const SmoothFunction& z_star,
                                          const std::vector<std::size_t>& n_list,
                                          const ManufacturedOptions& options = {});

/// The pointwise right-hand side used by manufactured_convergence.
ScalarField manufactured_rhs(const ProblemSpec& spec, const SmoothFunction& z_star,
                             std::size_t oracle_resolution = 32);

struct AdjointCheck {
  double bilinear = 0.0;  // v^T F u
  double pairing = 0.0;   // (D^alpha_{d-,eps}(p v), u)
  double relative_error = 0.0;
};

/// Compares the assembled fractional block with the right-sided truncated
/// derivative of p v paired with u (P1 mass product). eps <= 0 selects the
/// eps-limit instead of a fixed radius.
AdjointCheck adjoint_check(const P1Space& space, const CoefficientField& coeffs, FractionalOrder alpha,
                           const GridFunction& v, const GridFunction& u, double epsilon,
                           const Matrix* fractional = nullptr);

/// Smallest eigenvalue of sym(F) relative to the L2 Gram matrix.
double accretivity_margin(const Matrix& fractional, const Matrix& gram_l2);

void write_csv(std::ostream& out, const ConvergenceTable& table);
void write_csv(std::ostream& out, const ScanReport& report);

/// Formats a double with 17 significant digits (round-trip exact).
std::string format_double(double x);

}  // namespace fracvar::verify
