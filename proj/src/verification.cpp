#include "fracvar/verification.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "fracvar/quadrature.hpp"

namespace fracvar::verify {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kJacobiPoints = 24;
constexpr int kMaxDepth = 60;

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Integrand value plus a bound on its rounding noise. Difference quotients
// [f(r) - f(r + s)] / s lose digits as s -> 0, and no rule can resolve
// below that floor.
struct Sample {
  double value;
  double noise;
};
using Integrand = std::function<Sample(double)>;

// Adaptive Gauss-Legendre: a panel is accepted once its 10- and 20-point
// values agree to the share of the tolerance proportional to its length,
// or to the accumulated rounding noise of its samples.
class AdaptiveIntegrator {
 public:
  AdaptiveIntegrator(std::size_t budget, std::size_t& used) : budget_(budget), used_(used) {}

  double operator()(const Integrand& g, double a, double b, double tol) {
    if (!(b > a)) return 0.0;
    return panel(g, a, b, tol / (b - a), 0);
  }

 private:
  Sample rule(const Integrand& g, double a, double b, std::size_t points) {
    const quad::Rule& r = quad::gauss_legendre(points);
    Sample s{0.0, 0.0};
    for (std::size_t i = 0; i < r.size(); ++i) {
      const Sample x = g(a + (b - a) * r.nodes[i]);
      s.value += r.weights[i] * x.value;
      s.noise += r.weights[i] * x.noise;
    }
    used_ += points;
    if (used_ > budget_) throw OracleError("oracle: evaluation budget exhausted before convergence");
    return {s.value * (b - a), s.noise * (b - a)};
  }

  double panel(const Integrand& g, double a, double b, double density, int depth) {
    const Sample coarse = rule(g, a, b, 10);
    const Sample fine = rule(g, a, b, 20);
    if (!std::isfinite(fine.value)) throw OracleError("oracle: non-finite integrand value");
    const double gap = std::abs(fine.value - coarse.value);
    if (gap <= density * (b - a) || gap <= 4.0 * (coarse.noise + fine.noise)) return fine.value;
    if (depth >= kMaxDepth) throw OracleError("oracle: adaptive subdivision depth exceeded");
    const double m = 0.5 * (a + b);
    return panel(g, a, m, density, depth + 1) + panel(g, m, b, density, depth + 1);
  }

  std::size_t budget_;
  std::size_t& used_;
};

// int_0^c g(s) s^exponent ds by Gauss-Jacobi.
double jacobi_panel(const Integrand& g, double c, double exponent, std::size_t& used) {
  const quad::Rule& r = quad::gauss_jacobi_left(kJacobiPoints, exponent);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * g(c * r.nodes[i]).value;
  used += r.size();
  return s * std::pow(c, exponent + 1.0);
}

// int_0^length g(s) s^exponent ds: Jacobi rule on the first of `panels`
// equal panels, adaptive Gauss-Legendre on the rest.
double singular_integral(const Integrand& g, double exponent, double length, std::size_t panels,
                         std::size_t budget, std::size_t& used) {
  if (!(length > 0.0)) return 0.0;
  const double c = length / static_cast<double>(panels);
  const double head = jacobi_panel(g, c, exponent, used);
  AdaptiveIntegrator adaptive(budget, used);
  const auto weighted = [&](double s) {
    const Sample x = g(s);
    const double w = std::pow(s, exponent);
    return Sample{x.value * w, x.noise * w};
  };
  return head + adaptive(weighted, c, length, 1e-13 * std::max(1.0, std::abs(head)));
}

// (f(r) - f(r + sign s)) / s with its cancellation noise.
Sample quotient(const ScalarField& f, double r, double fr, double shift, double s) {
  const double ft = f(r + shift);
  return {(fr - ft) / s, 2.0 * kEps * (std::abs(fr) + std::abs(ft)) / s};
}

double oracle_at(const ScalarField& f, double alpha, double r, std::size_t panels, const OracleSpec& spec,
                 std::size_t& used) {
  const double d = spec.d;
  const double inv_g1 = 1.0 / std::tgamma(1.0 - alpha);
  switch (spec.op) {
    case OracleOperator::marchaud_right: {
      const double length = d - r;
      const double fr = f(r);
      if (!(length > 0.0)) return fr == 0.0 ? 0.0 : std::copysign(kInf, fr);
      const Integrand q = [&](double s) { return quotient(f, r, fr, s, s); };
      const double j = singular_integral(q, -alpha, length, panels, spec.max_points, used);
      return inv_g1 * (fr * std::pow(length, -alpha) + alpha * j);
    }
    case OracleOperator::kipriyanov_left: {
      const double fr = f(r);
      if (!(r > 0.0)) return fr == 0.0 ? 0.0 : std::copysign(kInf, fr);
      const int m = spec.n - 1;
      const Integrand q = [&](double s) {
        const Sample x = quotient(f, r, fr, -s, s);
        const double w = std::pow(1.0 - s / r, m);
        return Sample{x.value * w, x.noise * w};
      };
      const double j = singular_integral(q, -alpha, r, panels, spec.max_points, used);
      const double c_n = std::exp(std::lgamma(static_cast<double>(spec.n)) - std::lgamma(spec.n - alpha));
      return c_n * fr * std::pow(r, -alpha) + alpha * inv_g1 * j;
    }
    case OracleOperator::integral_right: {
      const Integrand g = [&](double s) {
        const double v = f(r + s);
        return Sample{v, kEps * std::abs(v)};
      };
      return singular_integral(g, alpha - 1.0, d - r, panels, spec.max_points, used) / std::tgamma(alpha);
    }
    case OracleOperator::psi_minus: {
      const double eps = spec.epsilon;
      if (!(eps > 0.0) || eps > d) throw DomainError("oracle: psi_minus needs 0 < epsilon <= d");
      const double fr = f(r);
      if (r <= d - eps) {
        AdaptiveIntegrator adaptive(spec.max_points, used);
        const Integrand g = [&](double s) {
          const Sample x = quotient(f, r, fr, s, s);
          const double w = std::pow(s, -alpha);
          return Sample{x.value * w, x.noise * w};
        };
        // Composite start so that `panels` controls the resolution here too.
        const double length = d - r;
        double sum = 0.0;
        const double width = (length - eps) / static_cast<double>(panels);
        for (std::size_t k = 0; k < panels; ++k) {
          const double a = eps + width * static_cast<double>(k);
          sum += adaptive(g, a, a + width, 1e-13 / static_cast<double>(panels));
        }
        return sum;
      }
      if (r >= d) return fr == 0.0 ? 0.0 : -std::copysign(kInf, fr);
      return fr / alpha * (std::pow(eps, -alpha) - std::pow(d - r, -alpha));
    }
  }
  throw OracleError("oracle: unknown operator");
}

// Doubles the panel count until two successive values agree.
double oracle_point(const ScalarField& f, double alpha, double r, std::size_t resolution, const OracleSpec& spec) {
  std::size_t used = 0;
  std::size_t panels = resolution;
  double previous = oracle_at(f, alpha, r, panels, spec, used);
  while (std::isfinite(previous)) {
    panels *= 2;
    const double current = oracle_at(f, alpha, r, panels, spec, used);
    if (std::abs(current - previous) <= spec.tolerance * std::max(1.0, std::abs(current))) return current;
    if (used > spec.max_points) {
      std::ostringstream msg;
      msg << "oracle: no agreement at r = " << r << " after " << used << " evaluations (last change "
          << std::abs(current - previous) << ")";
      throw OracleError(msg.str());
    }
    previous = current;
  }
  return previous;  // endpoint singularity, exact by construction
}

double log_ratio(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) return kNaN;
  return std::log(a / b);
}

double fitted_slope(const std::vector<ConvergenceRow>& rows, bool h1) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& row : rows) {
    const double e = h1 ? row.h1_error : row.l2_error;
    if (!(e > 0.0)) continue;
    const double x = std::log(static_cast<double>(row.n));
    const double y = -std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) return kNaN;
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

void fill_rates(std::vector<ConvergenceRow>& rows) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i == 0) {
      rows[i].l2_rate = rows[i].h1_rate = kNaN;
      continue;
    }
    const double dn = std::log(static_cast<double>(rows[i].n) / static_cast<double>(rows[i - 1].n));
    rows[i].l2_rate = log_ratio(rows[i - 1].l2_error, rows[i].l2_error) / dn;
    rows[i].h1_rate = log_ratio(rows[i - 1].h1_error, rows[i].h1_error) / dn;
  }
}

// Trapezoid-weighted L_q norm over all nodes.
double lq_norm(const GridFunction& f, double q) {
  const RayGrid& g = f.grid();
  double s = 0.0;
  for (std::size_t k = 0; k < g.intervals(); ++k)
    s += 0.5 * g.spacing(k) * (std::pow(std::abs(f[k]), q) + std::pow(std::abs(f[k + 1]), q));
  return std::pow(s, 1.0 / q);
}

}  // namespace

std::vector<double> oracle_derivative(const ScalarField& f, FractionalOrder alpha,
                                      const std::vector<double>& points, std::size_t resolution,
                                      const OracleSpec& spec) {
  if (resolution < 1) throw DomainError("oracle_derivative: resolution must be positive");
  if (!(spec.d > 0.0)) throw DomainError("oracle_derivative: d must be positive");
  if (spec.n < 1) throw DomainError("oracle_derivative: n must be >= 1");
  std::vector<double> out(points.size());
  for_each_index(points.size(), Exec::parallel, [&](std::size_t i) {
    const double r = points[i];
    if (r < 0.0 || r > spec.d) throw DomainError("oracle_derivative: point outside [0, d]");
    out[i] = oracle_point(f, alpha.value(), r, resolution, spec);
  });
  return out;
}

IdentityResidual make_residual(std::string name, double residual, double tolerance) {
  IdentityResidual r;
  r.name = std::move(name);
  r.residual = residual;
  r.tolerance = tolerance;
  r.pass = residual <= tolerance;
  return r;
}

IdentityResidual sbp_test(const GridFunction& v, const GridFunction& u, const DifferenceStep& step) {
  const double margin = support_margin(v);
  if (!(margin > 2.0 * std::abs(step.h))) {
    std::ostringstream msg;
    msg << "sbp_test: support of v is " << margin << " from the boundary, needs more than 2|h| = "
        << 2.0 * std::abs(step.h);
    throw DomainError(msg.str());
  }
  const GridFunction dv = difference_quotient(v, step);
  const GridFunction du = difference_quotient(u, DifferenceStep(-step.h, step.interpolate));
  const RayGrid& g = v.grid();
  double sum = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const double w = 0.5 * ((i > 0 ? g.spacing(i - 1) : 0.0) + (i < g.intervals() ? g.spacing(i) : 0.0));
    sum += w * (dv[i] * u[i] + v[i] * du[i]);
    scale += w * (std::abs(dv[i] * u[i]) + std::abs(v[i] * du[i]));
  }
  return make_residual("sbp", std::abs(sum), 1e-12 * scale);
}

IdentityResidual greens_test(const SmoothFunction& u, const GridFunction& v, const CoefficientField& coeffs,
                             double tolerance, std::size_t points) {
  if (!coeffs.a_prime) throw DomainError("greens_test: the coefficient derivative a' is required");
  const RayGrid& g = v.grid();
  const quad::Rule& rule = quad::gauss_legendre(points);
  double lhs = 0.0;
  double rhs = 0.0;
  for (std::size_t k = 0; k < g.intervals(); ++k) {
    const double h = g.spacing(k);
    const double slope = v.slope(k);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * h;
      const double x = g.node(k) + rule.nodes[q] * h;
      const double vx = v[k] * (1.0 - rule.nodes[q]) + v[k + 1] * rule.nodes[q];
      const double a = coeffs.a(x);
      const double du = u.d1(x);
      lhs -= w * vx * (coeffs.a_prime(x) * du + a * u.d2(x));
      rhs += w * a * slope * du;
    }
  }
  return make_residual("greens", std::abs(lhs - rhs), tolerance);
}

double ConvergenceTable::last_l2_rate() const { return rows.empty() ? kNaN : rows.back().l2_rate; }
double ConvergenceTable::last_h1_rate() const { return rows.empty() ? kNaN : rows.back().h1_rate; }

double ConvergenceTable::min_l2_rate() const {
  double m = kInf;
  for (std::size_t i = 1; i < rows.size(); ++i) m = std::min(m, rows[i].l2_rate);
  return rows.size() < 2 ? kNaN : m;
}

double ConvergenceTable::fitted_l2_rate() const { return fitted_slope(rows, false); }
double ConvergenceTable::fitted_h1_rate() const { return fitted_slope(rows, true); }

ConvergenceTable coincidence_test(const ScalarField& phi, FractionalOrder alpha,
                                  const std::vector<std::size_t>& n_list, const CoincidenceOptions& options) {
  ConvergenceTable table;
  table.name = "coincidence";
  for (std::size_t n : n_list) {
    const GridPtr grid = build_mesh(options.d, n);
    const GridFunction phi_h = interpolate(phi, grid);
    const GridFunction f = fractional_integral_right(phi_h, alpha, options.exec);
    const MarchaudLimit lim = marchaud_right(f, alpha, options.limit, options.exec);
    ConvergenceRow row;
    row.n = n;
    row.l2_error = norms(lim.value - phi_h).l2;
    row.h1_error = kNaN;
    row.reference = norms(phi_h).l2;
    table.rows.push_back(row);
  }
  fill_rates(table.rows);
  return table;
}

std::vector<GridFunction> random_h10_family(const GridPtr& grid, std::size_t count, std::uint64_t seed,
                                            std::size_t modes) {
  // Uniform coefficients in [-1, 1) built from raw 64-bit draws, so the family
  // is identical on every standard library.
  std::mt19937_64 rng(seed);
  const double d = grid->length();
  std::vector<GridFunction> out;
  out.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    std::vector<double> coef(modes);
    for (auto& x : coef) x = 2.0 * std::ldexp(static_cast<double>(rng() >> 11), -53) - 1.0;
    GridFunction f(grid);
    for (std::size_t i = 0; i < grid->node_count(); ++i) {
      const double x = grid->node(i);
      double s = 0.0;
      for (std::size_t k = 1; k <= modes; ++k)
        s += coef[k - 1] * std::sin(static_cast<double>(k) * M_PI * x / d) / static_cast<double>(k * k);
      f[i] = s;
    }
    f[0] = 0.0;
    f[grid->node_count() - 1] = 0.0;
    out.push_back(std::move(f));
  }
  return out;
}

ScanReport embedding_scan(const std::vector<GridFunction>& family, FractionalOrder alpha, double q, double beta,
                          const std::vector<double>& delta_grid, Exec exec) {
  if (!(q > 2.0) || !std::isfinite(q)) throw ConfigError("embedding_scan: q must be a finite value above 2");
  for (double delta : delta_grid)
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("embedding_scan: every delta must lie in (0, 1)");
  ScanReport report;
  report.alpha = alpha.value();
  report.beta = beta;
  report.q_exponent = q;
  report.nu = 0.5 - 1.0 / q + alpha.value() + beta;
  report.delta_grid = delta_grid;
  report.family_size = family.size();
  if (!(report.nu > 0.0 && report.nu < 1.0)) {
    std::ostringstream msg;
    msg << "embedding_scan: nu = " << report.nu << " must lie in (0, 1)";
    throw ConfigError(msg.str());
  }
  report.satisfies_mapping_range = alpha.value() < 0.5 + 1.0 / q;
  report.satisfies_window = alpha.value() <= 0.5 || q < 2.0 / (2.0 * alpha.value() - 1.0);

  const KipriyanovSpec spec(alpha, 1);
  struct Measured {
    double lhs, l2, semi;
  };
  std::vector<Measured> measured;
  measured.reserve(family.size());
  for (const GridFunction& f : family) {
    const KipriyanovResult d = kipriyanov_left(f, spec, exec);
    if (d.endpoint_singular) throw DomainError("embedding_scan: family members must vanish at r = 0");
    const Norms nf = norms(f);
    measured.push_back({lq_norm(d.value, q), nf.l2, nf.h1_semi});
  }
  double k = 0.0;
  for (const Measured& m : measured) {
    if (!(m.l2 > 0.0)) continue;
    for (double delta : delta_grid) {
      const double rhs0 = std::pow(delta, 1.0 - report.nu) * m.semi;
      k = std::max(k, (m.lhs - rhs0) * std::pow(delta, report.nu) / m.l2);
    }
  }
  report.fitted_k = k;
  double worst = 0.0;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    const Measured& m = measured[i];
    for (double delta : delta_grid) {
      ScanRecord rec;
      rec.function_index = i;
      rec.delta = delta;
      rec.lhs = m.lhs;
      rec.rhs_without_k = std::pow(delta, 1.0 - report.nu) * m.semi;
      rec.l2 = m.l2;
      const double rhs = k * std::pow(delta, -report.nu) * m.l2 + rec.rhs_without_k;
      rec.ratio = rhs > 0.0 ? m.lhs / rhs : 0.0;
      worst = std::max(worst, rec.ratio);
      report.records.push_back(rec);
    }
  }
  report.worst_ratio = worst;
  return report;
}

ScalarField manufactured_rhs(const ProblemSpec& spec, const SmoothFunction& z_star, std::size_t oracle_resolution) {
  if (!spec.coeffs.a_prime) throw DomainError("manufactured_rhs: the coefficient derivative a' is required");
  const bool fractional = spec.coeffs.p_sup > 0.0;
  OracleSpec oracle;
  oracle.op = OracleOperator::kipriyanov_left;
  oracle.d = spec.d;
  oracle.n = spec.n;
  const CoefficientField coeffs = spec.coeffs;
  const FractionalOrder alpha = spec.alpha;
  return [=](double x) {
    double value = -(coeffs.a_prime(x) * z_star.d1(x) + coeffs.a(x) * z_star.d2(x));
    if (fractional) {
      const double pv = coeffs.p(x);
      if (pv != 0.0) {
        const double dz = oracle_point(z_star.value, alpha.value(), x, oracle_resolution, oracle);
        if (!std::isfinite(dz)) throw OracleError("manufactured_rhs: z* must vanish at r = 0");
        value += pv * dz;
      }
    }
    return value;
  };
}

ConvergenceTable manufactured_convergence(const ProblemSpec& spec_template, const SmoothFunction& z_star,
                                          const std::vector<std::size_t>& n_list,
                                          const ManufacturedOptions& options) {
  ProblemSpec spec = spec_template;
  spec.rhs = manufactured_rhs(spec, z_star, options.oracle_resolution);
  ConvergenceTable table;
  table.name = "manufactured";
  const quad::Rule& rule = quad::gauss_legendre(5);
  for (std::size_t n : n_list) {
    SolveOptions so = options.solve;
    so.certify = false;
    const BvpSolution sol = solve_bvp(spec, n, so);
    const RayGrid& g = sol.solution.grid();
    double e0 = 0.0, e1 = 0.0, ref = 0.0;
    for (std::size_t k = 0; k < g.intervals(); ++k) {
      const double h = g.spacing(k);
      const double slope = sol.solution.slope(k);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double w = rule.weights[q] * h;
        const double t = rule.nodes[q];
        const double x = g.node(k) + t * h;
        const double zh = sol.solution[k] * (1.0 - t) + sol.solution[k + 1] * t;
        const double z = z_star.value(x);
        e0 += w * (zh - z) * (zh - z);
        e1 += w * (slope - z_star.d1(x)) * (slope - z_star.d1(x));
        ref += w * z * z;
      }
    }
    ConvergenceRow row;
    row.n = n;
    row.l2_error = std::sqrt(e0);
    row.h1_error = std::sqrt(e0 + e1);
    row.reference = std::sqrt(ref);
    table.rows.push_back(row);
  }
  fill_rates(table.rows);
  return table;
}

AdjointCheck adjoint_check(const P1Space& space, const CoefficientField& coeffs, FractionalOrder alpha,
                           const GridFunction& v, const GridFunction& u, double epsilon, const Matrix* fractional) {
  const RayGrid& g = space.grid();
  Matrix local;
  if (fractional == nullptr) {
    local = assemble_fractional(space, coeffs, alpha, 1);
    fractional = &local;
  }
  const std::vector<double> vi = space.restrict(v);
  const std::vector<double> ui = space.restrict(u);
  const Eigen::Map<const Vector> vv(vi.data(), static_cast<Eigen::Index>(vi.size()));
  const Eigen::Map<const Vector> uu(ui.data(), static_cast<Eigen::Index>(ui.size()));
  AdjointCheck out;
  out.bilinear = vv.dot(*fractional * uu);

  const GridFunction pv = multiply(interpolate(coeffs.p, space.grid_ptr()), v);
  const GridFunction dpv = epsilon > 0.0 ? marchaud_truncated_right(pv, alpha, TruncationEpsilon(epsilon))
                                         : marchaud_right(pv, alpha).value;
  double pairing = 0.0;
  for (std::size_t k = 0; k < g.intervals(); ++k) {
    const double h = g.spacing(k);
    pairing += h / 6.0 *
               (2.0 * dpv[k] * u[k] + dpv[k] * u[k + 1] + dpv[k + 1] * u[k] + 2.0 * dpv[k + 1] * u[k + 1]);
  }
  out.pairing = pairing;
  const double scale = std::max(std::abs(out.bilinear), std::abs(out.pairing));
  out.relative_error = scale > 0.0 ? std::abs(out.bilinear - out.pairing) / scale : 0.0;
  return out;
}

double accretivity_margin(const Matrix& fractional, const Matrix& gram_l2) {
  const Matrix sym = 0.5 * (fractional + fractional.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(sym, gram_l2, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConsistencyError("accretivity_margin: eigensolve failed");
  return es.eigenvalues().minCoeff();
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_csv(std::ostream& out, const ConvergenceTable& table) {
  out << "N,l2_error,h1_error,reference,l2_rate,h1_rate\n";
  for (const auto& r : table.rows)
    out << r.n << ',' << format_double(r.l2_error) << ',' << format_double(r.h1_error) << ','
        << format_double(r.reference) << ',' << format_double(r.l2_rate) << ',' << format_double(r.h1_rate) << '\n';
}

void write_csv(std::ostream& out, const ScanReport& report) {
  out << "function_index,delta,lhs,rhs_without_k,l2,ratio\n";
  for (const auto& r : report.records)
    out << r.function_index << ',' << format_double(r.delta) << ',' << format_double(r.lhs) << ','
        << format_double(r.rhs_without_k) << ',' << format_double(r.l2) << ',' << format_double(r.ratio) << '\n';
}

}  // namespace fracvar::verify
