#include "fracvar/variational.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "fracvar/quadrature.hpp"

namespace fracvar {
namespace {

constexpr std::size_t kSmoothPoints = 8;
constexpr std::size_t kLoadPoints = 5;

// Unit-interval rule resolving integrands that behave like u^{1-alpha} at
// u = 0: geometric panels with ratio 0.2, the innermost one mapped by
// u = c v^3 to flatten the remaining singular power.
const quad::Rule& graded_left_rule() {
  static const quad::Rule rule = [] {
    constexpr double ratio = 0.2;
    constexpr int levels = 8;
    const quad::Rule& gl = quad::gauss_legendre(10);
    quad::Rule r;
    double hi = 1.0;
    for (int l = 0; l < levels; ++l) {
      const double lo = hi * ratio;
      for (std::size_t q = 0; q < gl.size(); ++q) {
        r.nodes.push_back(lo + (hi - lo) * gl.nodes[q]);
        r.weights.push_back((hi - lo) * gl.weights[q]);
      }
      hi = lo;
    }
    for (std::size_t q = 0; q < gl.size(); ++q) {
      const double v = gl.nodes[q];
      r.nodes.push_back(hi * v * v * v);
      r.weights.push_back(3.0 * hi * v * v * gl.weights[q]);
    }
    return r;
  }();
  return rule;
}

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

struct ElementSamples {
  std::vector<double> x;
  std::vector<double> w;  // physical weights
  std::vector<double> p;
};

ElementSamples sample_element(const RayGrid& g, std::size_t k, const quad::Rule& rule,
                              const ScalarField& p) {
  ElementSamples s;
  const double h = g.spacing(k);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double x = g.node(k) + h * rule.nodes[q];
    s.x.push_back(x);
    s.w.push_back(h * rule.weights[q]);
    s.p.push_back(p(x));
  }
  return s;
}

double symmetric_min_generalized(const Matrix& a, const Matrix& b, const char* what) {
  Eigen::LLT<Matrix> llt(b);
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << what << ": Gram matrix is not positive definite";
    throw ConsistencyError(msg.str());
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(a, b, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << what << ": generalized eigensolve failed";
    throw ConsistencyError(msg.str());
  }
  return es.eigenvalues().minCoeff();
}

}  // namespace

Matrix assemble_diffusion(const P1Space& space, const CoefficientField& coeffs) {
  const RayGrid& g = space.grid();
  const std::size_t dofs = space.dof_count();
  Matrix a = Matrix::Zero(idx(dofs), idx(dofs));
  const quad::Rule& rule = quad::gauss_legendre(kCoefficientGaussPoints);
  for (std::size_t k = 0; k < g.intervals(); ++k) {
    const double h = g.spacing(k);
    double integral = 0.0;  // int_e a
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double x = g.node(k) + h * rule.nodes[q];
      const double av = coeffs.a(x);
      if (!(av > 0.0)) {
        std::ostringstream msg;
        msg << "assemble_diffusion: a(" << x << ") = " << av << " violates ellipticity";
        throw EllipticityError(msg.str());
      }
      integral += rule.weights[q] * h * av;
    }
    const double s = integral / (h * h);
    // local stiffness s * [1 -1; -1 1] on nodes k, k+1
    const bool left = k >= 1;
    const bool right = k + 1 <= dofs;
    if (left) a(idx(k - 1), idx(k - 1)) += s;
    if (right) a(idx(k), idx(k)) += s;
    if (left && right) {
      a(idx(k - 1), idx(k)) -= s;
      a(idx(k), idx(k - 1)) -= s;
    }
  }
  return a;
}

Matrix assemble_mass(const P1Space& space) {
  const RayGrid& g = space.grid();
  const std::size_t dofs = space.dof_count();
  Matrix m = Matrix::Zero(idx(dofs), idx(dofs));
  for (std::size_t k = 0; k < g.intervals(); ++k) {
    const double h = g.spacing(k);
    const bool left = k >= 1;
    const bool right = k + 1 <= dofs;
    if (left) m(idx(k - 1), idx(k - 1)) += h / 3.0;
    if (right) m(idx(k), idx(k)) += h / 3.0;
    if (left && right) {
      m(idx(k - 1), idx(k)) += h / 6.0;
      m(idx(k), idx(k - 1)) += h / 6.0;
    }
  }
  return m;
}

Matrix assemble_weighted_mass(const P1Space& space, const CoefficientField& coeffs) {
  const RayGrid& g = space.grid();
  const std::size_t dofs = space.dof_count();
  Matrix m = Matrix::Zero(idx(dofs), idx(dofs));
  const quad::Rule& rule = quad::gauss_legendre(kCoefficientGaussPoints);
  for (std::size_t k = 0; k < g.intervals(); ++k) {
    const double h = g.spacing(k);
    double mll = 0.0, mlr = 0.0, mrr = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double u = rule.nodes[q];
      const double w = rule.weights[q] * h * coeffs.p(g.node(k) + u * h);
      mll += w * (1.0 - u) * (1.0 - u);
      mlr += w * (1.0 - u) * u;
      mrr += w * u * u;
    }
    const bool left = k >= 1;
    const bool right = k + 1 <= dofs;
    if (left) m(idx(k - 1), idx(k - 1)) += mll;
    if (right) m(idx(k), idx(k)) += mrr;
    if (left && right) {
      m(idx(k - 1), idx(k)) += mlr;
      m(idx(k), idx(k - 1)) += mlr;
    }
  }
  return m;
}

Matrix assemble_fractional(const P1Space& space, const CoefficientField& coeffs,
                           FractionalOrder alpha, int n, Exec exec) {
  const RayGrid& g = space.grid();
  const std::size_t n_el = g.intervals();
  const std::size_t dofs = space.dof_count();
  Matrix f = Matrix::Zero(idx(dofs), idx(dofs));
  if (coeffs.p_sup == 0.0) return f;

  const KipriyanovSpec spec(alpha, n);
  const KipriyanovHat hat(g, spec);
  const quad::Rule& smooth = quad::gauss_legendre(kSmoothPoints);
  const quad::Rule& graded = graded_left_rule();
  std::vector<ElementSamples> smooth_samples(n_el);
  std::vector<ElementSamples> graded_samples(n_el);
  for (std::size_t k = 0; k < n_el; ++k) {
    smooth_samples[k] = sample_element(g, k, smooth, coeffs.p);
    graded_samples[k] = sample_element(g, k, graded, coeffs.p);
  }

  // Column j (node j) only writes column j - 1 of F.
  for_each_index(dofs, exec, [&](std::size_t col) {
    const std::size_t j = col + 1;
    for (std::size_t m = j - 1; m < n_el; ++m) {
      // D^alpha phi_j has (x - t_k)^{1-alpha} kinks at t_{j-1}, t_j, t_{j+1}.
      const bool singular = m <= j + 1;
      const ElementSamples& s = singular ? graded_samples[m] : smooth_samples[m];
      const double tl = g.node(m);
      const double h = g.spacing(m);
      double left_sum = 0.0;   // row of node m
      double right_sum = 0.0;  // row of node m + 1
      for (std::size_t q = 0; q < s.x.size(); ++q) {
        const double value = hat(j, s.x[q]);
        if (value == 0.0) continue;
        const double wpv = s.w[q] * s.p[q] * value;
        const double u = (s.x[q] - tl) / h;
        left_sum += wpv * (1.0 - u);
        right_sum += wpv * u;
      }
      if (m >= 1) f(idx(m - 1), idx(col)) += left_sum;
      if (m + 1 <= dofs) f(idx(m), idx(col)) += right_sum;
    }
  });
  return f;
}

AssembledForm assemble(const P1Space& space, const CoefficientField& coeffs, FractionalOrder alpha,
                       int n, Exec exec) {
  AssembledForm form;
  form.diffusion = assemble_diffusion(space, coeffs);
  form.fractional = assemble_fractional(space, coeffs, alpha, n, exec);
  form.gram_l2 = assemble_mass(space);
  form.gram_h10 = assemble_diffusion(space, CoefficientField::constant(1.0, 0.0)) + form.gram_l2;
  form.gram_weighted = assemble_weighted_mass(space, coeffs);
  form.a0 = coeffs.a0;
  form.p0 = coeffs.p0;
  form.a_sup = coeffs.a_sup;
  return form;
}

Vector assemble_load(const P1Space& space, const ScalarField& f) {
  const RayGrid& g = space.grid();
  const std::size_t dofs = space.dof_count();
  Vector b = Vector::Zero(idx(dofs));
  const quad::Rule& plain = quad::gauss_legendre(kLoadPoints);
  for (std::size_t k = 0; k < g.intervals(); ++k) {
    // Right-hand sides built from D^alpha of smooth data carry r^{1-alpha} at 0.
    const quad::Rule& rule = k == 0 ? graded_left_rule() : plain;
    const double h = g.spacing(k);
    double bl = 0.0, br = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double u = rule.nodes[q];
      const double fv = f(g.node(k) + u * h);
      if (!std::isfinite(fv)) {
        std::ostringstream msg;
        msg << "assemble_load: right-hand side is not finite at x = " << g.node(k) + u * h;
        throw DataError(msg.str());
      }
      bl += rule.weights[q] * h * fv * (1.0 - u);
      br += rule.weights[q] * h * fv * u;
    }
    if (k >= 1) b(idx(k - 1)) += bl;
    if (k + 1 <= dofs) b(idx(k)) += br;
  }
  return b;
}

double friedrichs_constant(const P1Space& space) {
  if (space.dof_count() < 1) throw DomainError("friedrichs_constant: empty space");
  const Matrix k = assemble_diffusion(space, CoefficientField::constant(1.0, 0.0));
  const Matrix m = assemble_mass(space);
  const double lambda_min = symmetric_min_generalized(k, m, "friedrichs_constant");
  return 1.0 / std::sqrt(lambda_min);
}

LaxMilgramCertificate certify_lax_milgram(const AssembledForm& form,
                                          std::optional<double> lambda_used) {
  const Eigen::Index dofs = form.diffusion.rows();
  if (dofs < 2) throw DomainError("certify_lax_milgram: need at least two interior DOFs");
  const Matrix k = form.system();
  const Matrix k_sym = 0.5 * (k + k.transpose());
  const Matrix f_sym = 0.5 * (form.fractional + form.fractional.transpose());

  LaxMilgramCertificate cert;
  cert.k2_estimate = symmetric_min_generalized(k_sym, form.gram_h10, "certify_lax_milgram");
  cert.accretivity_margin = symmetric_min_generalized(f_sym, form.gram_l2, "certify_lax_milgram");

  // Largest singular value of L^{-1} K L^{-T} with G = L L^T.
  Eigen::LLT<Matrix> llt(form.gram_h10);
  const Matrix left = llt.matrixL().solve(k);
  const Matrix both = llt.matrixL().solve(left.transpose()).transpose();
  Eigen::BDCSVD<Matrix> svd(both);
  cert.k1_estimate = svd.singularValues()(0);

  if (lambda_used) {
    if (!(*lambda_used > 0.0)) throw DomainError("lambda_used must be positive");
    cert.lambda_used = *lambda_used;
  } else {
    const Matrix stiffness = form.gram_h10 - form.gram_l2;
    cert.lambda_used =
        1.0 / std::sqrt(symmetric_min_generalized(stiffness, form.gram_l2, "certify_lax_milgram"));
  }
  cert.k2_predicted = std::min(form.a0, form.p0 / (cert.lambda_used * cert.lambda_used));
  return cert;
}

BvpSolution solve_assembled(const P1Space& space, AssembledForm form, Vector load) {
  const Matrix k = form.system();
  Eigen::PartialPivLU<Matrix> lu(k);
  const double rcond = lu.rcond();
  if (!(rcond > 1e3 * std::numeric_limits<double>::epsilon())) {
    std::ostringstream msg;
    msg << "solve_bvp: system matrix is numerically singular (rcond = " << rcond
        << "); coercivity lost";
    throw SolvabilityError(msg.str());
  }
  Vector z = lu.solve(load);
  BvpSolution out;
  const Vector r = k * z - load;
  out.residual = r.lpNorm<Eigen::Infinity>();
  out.residual_scale = std::max(load.lpNorm<Eigen::Infinity>(),
                                k.cwiseAbs().rowwise().sum().maxCoeff() * z.lpNorm<Eigen::Infinity>());
  out.solution = space.expand(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
  out.coefficients = std::move(z);
  out.load = std::move(load);
  out.form = std::move(form);
  return out;
}

BvpSolution solve_bvp(const ProblemSpec& spec, std::size_t intervals, const SolveOptions& options) {
  if (!spec.rhs) throw DomainError("solve_bvp: right-hand side is missing");
  const P1Space space(build_mesh(spec.d, intervals, options.mesh));
  if (!(spec.coeffs.a0 > 0.0)) throw EllipticityError("solve_bvp: a0 must be positive");
  if (spec.coeffs.p0 < 0.0) throw EllipticityError("solve_bvp: p must be nonnegative");
  AssembledForm form = assemble(space, spec.coeffs, spec.alpha, spec.n, options.exec);
  Vector load = assemble_load(space, spec.rhs);
  BvpSolution out = solve_assembled(space, std::move(form), std::move(load));
  if (options.certify) out.certificate = certify_lax_milgram(out.form, options.lambda_used);
  return out;
}

RegularityReport h2_probe(const GridFunction& z, const GridFunction& f,
                          const std::vector<double>& h_list, const ProbeOptions& options) {
  const RayGrid& g = z.grid();
  if (!g.uniform()) throw DomainError("h2_probe: requires a uniform grid");
  const double d = g.length();
  const double spacing = d / static_cast<double>(g.intervals());
  const double lo = options.lo * d;
  const double hi = options.hi * d;
  const double margin = std::min(lo, d - hi);

  RegularityReport report;
  const Norms zn = norms(z);
  const Norms fn = norms(f);
  report.bound_reference = zn.h1 + fn.l2;

  std::vector<double> slopes(g.intervals());
  for (std::size_t k = 0; k < g.intervals(); ++k) slopes[k] = z.slope(k);

  double previous = std::numeric_limits<double>::infinity();
  for (double h : h_list) {
    if (!(h > 0.0) || !(h < previous)) throw DomainError("h2_probe: h values must be positive and decreasing");
    previous = h;
    if (!(2.0 * h < margin)) {
      std::ostringstream msg;
      msg << "h2_probe: 2|h| = " << 2.0 * h << " must be below dist(subdomain, boundary) = " << margin;
      throw DomainError(msg.str());
    }
    const double shift_real = h / spacing;
    const auto shift = static_cast<std::size_t>(std::llround(shift_real));
    if (shift == 0 || std::abs(shift_real - static_cast<double>(shift)) > 1e-9 * shift_real)
      throw DomainError("h2_probe: h must be a multiple of the grid spacing");
    double sum = 0.0;
    for (std::size_t k = 0; k + shift < g.intervals(); ++k) {
      if (g.node(k) < lo - 1e-12 * d || g.node(k + 1) > hi + 1e-12 * d) continue;
      const double q = (slopes[k + shift] - slopes[k]) / h;
      sum += g.spacing(k) * q * q;
    }
    const double qn = std::sqrt(sum);
    report.h_values.push_back(h);
    report.quotient_norms.push_back(qn);
    report.ratios.push_back(report.bound_reference > 0.0 ? qn / report.bound_reference : 0.0);
  }
  return report;
}

void write_coordinate(std::ostream& out, const Matrix& m) {
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) == 0.0) continue;
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out << i << ' ' << j << ' ' << buf << '\n';
    }
  }
}

}  // namespace fracvar
