#pragma once

// Fractional integral and derivative operators for functions sampled on a
// ray segment [0, d]. Every operator reads its input as the continuous
// piecewise-linear interpolant of the samples and integrates the kernel
// moments exactly element by element (product integration), so the results
// are exact for P1 data and the (t - r)^{-alpha-1} singularity never meets
// a quadrature node.

#include <cstddef>
#include <vector>

#include "fracvar/exec.hpp"
#include "fracvar/grid.hpp"

namespace fracvar {

/// Order alpha in the open interval (0, 1).
class FractionalOrder {
 public:
  explicit FractionalOrder(double alpha);
  double value() const noexcept { return alpha_; }

 private:
  double alpha_;
};

/// Truncation radius epsilon > 0 of the right-sided truncated family.
class TruncationEpsilon {
 public:
  explicit TruncationEpsilon(double epsilon);
  double value() const noexcept { return epsilon_; }

 private:
  double epsilon_;
};

/// Strictly decreasing sequence of truncation radii.
class EpsilonSchedule {
 public:
  explicit EpsilonSchedule(std::vector<double> radii);

  /// d * 2^{-k} for k = first..last.
  static EpsilonSchedule geometric(double d, int first = 3, int last = 20);

  const std::vector<double>& radii() const noexcept { return radii_; }

 private:
  std::vector<double> radii_;
};

/// (n-1)! / Gamma(n - alpha).
double gamma_coefficient(int n, FractionalOrder alpha);

struct KipriyanovSpec {
  KipriyanovSpec(FractionalOrder alpha, int n);

  FractionalOrder alpha;
  int n;
  double c_n_alpha;
};

/// Right-sided Riemann-Liouville integral
///   I^alpha_{d-} f(r) = 1/Gamma(alpha) int_r^d f(t) (t - r)^{alpha-1} dt.
GridFunction fractional_integral_right(const GridFunction& f, FractionalOrder alpha,
                                       Exec exec = default_exec);

/// The truncated family psi^-_eps. Integral branch on r <= d - eps, boundary
/// branch (f(r)/alpha)(eps^{-alpha} - (d-r)^{-alpha}) on d - eps < r <= d.
/// At r = d the boundary branch is -inf * sign(f(d)) (0 when f(d) = 0).
GridFunction psi_minus(const GridFunction& f, FractionalOrder alpha, TruncationEpsilon eps,
                       Exec exec = default_exec);

/// Truncated right-sided Marchaud derivative
///   f(r)(d-r)^{-alpha}/Gamma(1-alpha) + alpha/Gamma(1-alpha) psi^-_eps f.
/// On the boundary branch the (d-r)^{-alpha} terms cancel and the value is
/// f(r) eps^{-alpha} / Gamma(1-alpha), which is also what r = d receives.
GridFunction marchaud_truncated_right(const GridFunction& f, FractionalOrder alpha,
                                      TruncationEpsilon eps, Exec exec = default_exec);

/// Mirror image of marchaud_truncated_right: truncated left-sided Marchaud
/// derivative with boundary branch on 0 <= r < eps.
GridFunction marchaud_truncated_left(const GridFunction& f, FractionalOrder alpha,
                                     TruncationEpsilon eps, Exec exec = default_exec);

struct MarchaudLimitOptions {
  /// Exponent of the L_p grid norm that measures the limit.
  double p_exponent = 2.0;
  /// Stop once successive iterates differ by less than
  /// tolerance * max(1, ||iterate||_p).
  double tolerance = 1e-10;
  /// Empty: d * 2^{-k}, k = 3..20.
  std::vector<double> schedule;
  /// Richardson-eliminate the leading eps^{1-alpha} truncation error of
  /// successive iterates before comparing them.
  bool extrapolate = true;
};

struct MarchaudLimit {
  GridFunction value;
  double achieved_epsilon = 0.0;
  double last_distance = 0.0;
  std::size_t iterations = 0;
};

/// L_p limit eps -> 0 of marchaud_truncated_right along the schedule.
/// Throws DomainError when alpha * p >= 1 and f does not vanish at r = d,
/// ConvergenceError when the schedule is exhausted.
MarchaudLimit marchaud_right(const GridFunction& f, FractionalOrder alpha,
                             const MarchaudLimitOptions& options = {},
                             Exec exec = default_exec);

/// Left-sided counterpart of marchaud_right (mirror construction).
MarchaudLimit marchaud_left(const GridFunction& f, FractionalOrder alpha,
                            const MarchaudLimitOptions& options = {},
                            Exec exec = default_exec);

struct KipriyanovResult {
  GridFunction value;
  /// Set when f(0) != 0: the C_n f r^{-alpha} term diverges at r = 0 and the
  /// node value is reported as +-inf.
  bool endpoint_singular = false;
};

/// Kipriyanov derivative along the ray with weight (t/r)^{n-1}:
///   alpha/Gamma(1-alpha) int_0^r [f(r) - f(t)] (r-t)^{-alpha-1} (t/r)^{n-1} dt
///     + C_n f(r) r^{-alpha}.
KipriyanovResult kipriyanov_left(const GridFunction& f, const KipriyanovSpec& spec,
                                 Exec exec = default_exec);

/// Kipriyanov derivative of the P1 interpolant of f at an arbitrary x in (0, d].
double kipriyanov_at(const GridFunction& f, const KipriyanovSpec& spec, double x);

/// Kipriyanov derivative of the interior hat function attached to node j,
/// evaluated at x in (0, d]. Costs O(1) independent of the grid size.
class KipriyanovHat {
 public:
  KipriyanovHat(const RayGrid& grid, const KipriyanovSpec& spec);
  double operator()(std::size_t j, double x) const;

 private:
  const RayGrid* grid_;
  double alpha_;
  int m_;
  double factor_;
  double c_n_alpha_;
};

double kipriyanov_hat(const RayGrid& grid, std::size_t j, const KipriyanovSpec& spec, double x);

/// Lumped L_p norm with nodal weights (h_{i-1} + h_i)/2; the half-cell at
/// r = d gets weight zero.
double lp_grid_norm(const GridFunction& f, double p);

}  // namespace fracvar
