#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "fracvar/variational.hpp"
#include "support.hpp"

using namespace fracvar;

namespace {

P1Space space(double d, std::size_t n, MeshOptions m = {}) { return P1Space(build_mesh(d, n, m)); }

// int_{max(a,t)}^{b} (c0 + c1 x) (x - t)^beta dx, exact.
double ramp_moment(double a, double b, double c0, double c1, double t, double beta) {
  const double lo = std::max(a, t);
  if (!(b > lo)) return 0.0;
  const double base = c0 + c1 * t;
  auto prim = [&](double x) {
    const double s = x - t;
    return base * std::pow(s, beta + 1) / (beta + 1) + c1 * std::pow(s, beta + 2) / (beta + 2);
  };
  return prim(b) - prim(lo);
}

// Closed-form fractional block for n = 1 and constant p. For a hat that
// vanishes at 0 the derivative is a sum of ramps (x - t)_+ whose images are
// (x - t)_+^{1-alpha} / Gamma(2 - alpha); the products with the test hat are
// integrated exactly.
Matrix exact_fractional(const RayGrid& g, double alpha, double p) {
  const std::size_t dofs = g.intervals() - 1;
  const double beta = 1 - alpha;
  Matrix f = Matrix::Zero(static_cast<Eigen::Index>(dofs), static_cast<Eigen::Index>(dofs));
  for (std::size_t j = 1; j <= dofs; ++j) {
    const double hl = g.spacing(j - 1), hr = g.spacing(j);
    const double t[3] = {g.node(j - 1), g.node(j), g.node(j + 1)};
    const double c[3] = {1 / hl, -(1 / hl + 1 / hr), 1 / hr};
    for (std::size_t i = 1; i <= dofs; ++i) {
      // test hat: rising on [x_{i-1}, x_i], falling on [x_i, x_{i+1}]
      const double a0 = g.node(i - 1), a1 = g.node(i), a2 = g.node(i + 1);
      const double r0 = -a0 / (a1 - a0), r1 = 1 / (a1 - a0);
      const double f0 = a2 / (a2 - a1), f1 = -1 / (a2 - a1);
      double sum = 0.0;
      for (int m = 0; m < 3; ++m)
        sum += c[m] * (ramp_moment(a0, a1, r0, r1, t[m], beta) + ramp_moment(a1, a2, f0, f1, t[m], beta));
      f(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - 1)) = p * sum / std::tgamma(2 - alpha);
    }
  }
  return f;
}

double sym_min_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

ProblemSpec poisson(double p, double alpha, ScalarField f) {
  ProblemSpec s;
  s.alpha = FractionalOrder(alpha);
  s.coeffs = CoefficientField::constant(1.0, p);
  s.rhs = std::move(f);
  return s;
}

}  // namespace

TEST_CASE("assemble_diffusion examples") {
  const P1Space s = space(1.0, 8);
  const Matrix a1 = assemble_diffusion(s, CoefficientField::constant(1.0, 0.0));
  const double h = 1.0 / 8;
  for (Eigen::Index i = 0; i < 7; ++i)
    for (Eigen::Index j = 0; j < 7; ++j) {
      const double want = i == j ? 2 / h : (std::abs(i - j) == 1 ? -1 / h : 0.0);
      CHECK(a1(i, j) == doctest::Approx(want).epsilon(1e-14));
    }
  const Matrix a2 = assemble_diffusion(s, CoefficientField::constant(2.0, 0.0));
  CHECK((a2 - 2 * a1).cwiseAbs().maxCoeff() == 0.0);

  const P1Space s2 = space(1.0, 2);
  const CoefficientField lin = CoefficientField::sampled([](double x) { return 1 + x; }, [](double) { return 0.0; },
                                                         s2.grid());
  CHECK(assemble_diffusion(s2, lin)(0, 0) == doctest::Approx(6.0).epsilon(1e-14));

  CoefficientField bad = CoefficientField::constant(1.0, 0.0);
  bad.a = [](double x) { return x - 0.5; };
  CHECK_THROWS_AS(assemble_diffusion(s, bad), EllipticityError);
}

TEST_CASE("Gram matrices") {
  const P1Space s = space(1.0, 16, {Grading::graded, 2.0});
  const Matrix m = assemble_mass(s);
  const Matrix w = assemble_weighted_mass(s, CoefficientField::constant(1.0, 1.0));
  CHECK((m - w).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(Eigen::LLT<Matrix>(m).info() == Eigen::Success);
  // The interior hats sum to 1 except on the two end elements, where they ramp.
  const Vector one = Vector::Ones(m.rows());
  const double h0 = s.grid().spacing(0), hn = s.grid().spacing(15);
  CHECK(one.dot(m * one) == doctest::Approx(1.0 - h0 - hn + h0 / 3 + hn / 3).epsilon(1e-13));
}

TEST_CASE("assemble_fractional against the closed form (n = 1, p const)") {
  for (double alpha : {0.25, 0.5, 0.75}) {
    for (MeshOptions mesh : {MeshOptions{}, MeshOptions{Grading::graded, 2.0}}) {
      const P1Space s = space(1.3, 24, mesh);
      const Matrix got = assemble_fractional(s, CoefficientField::constant(1.0, 2.0), FractionalOrder(alpha), 1);
      const Matrix want = exact_fractional(s.grid(), alpha, 2.0);
      CHECK((got - want).cwiseAbs().maxCoeff() < 1e-9 * want.cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("assemble_fractional examples and properties") {
  const P1Space s = space(1.0, 8);
  const FractionalOrder a(0.5);
  CHECK(assemble_fractional(s, CoefficientField::constant(1.0, 0.0), a, 1).cwiseAbs().maxCoeff() == 0.0);
  const Matrix f = assemble_fractional(s, CoefficientField::constant(1.0, 1.0), a, 1);
  CHECK(sym_min_eig(f) >= -1e-10);
  // upper Hessenberg up to the neighbour: D^alpha phi_j vanishes left of x_{j-1}
  for (Eigen::Index i = 0; i < f.rows(); ++i)
    for (Eigen::Index j = i + 2; j < f.cols(); ++j) CHECK(f(i, j) == 0.0);

  // Accretivity for several orders, dimensions and a variable weight.
  const P1Space g = space(2.0, 40, {Grading::graded, 1.5});
  const CoefficientField var = CoefficientField::sampled([](double) { return 1.0; },
                                                         [](double x) { return 1 + 0.5 * std::sin(x); }, g.grid());
  for (double alpha : {0.1, 0.5, 0.9})
    for (int n : {1, 2, 3}) {
      const Matrix fv = assemble_fractional(g, var, FractionalOrder(alpha), n);
      const Matrix m = assemble_mass(g);
      Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(0.5 * (fv + fv.transpose()), m, Eigen::EigenvaluesOnly);
      CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
}

TEST_CASE("fractional assembly: serial and parallel bit-identical") {
  const P1Space s = space(1.0, 200, {Grading::graded, 2.0});
  const CoefficientField c = CoefficientField::constant(1.0, 1.5);
  for (int n : {1, 3}) {
    const Matrix ser = assemble_fractional(s, c, FractionalOrder(0.6), n, Exec::serial);
    const Matrix par = assemble_fractional(s, c, FractionalOrder(0.6), n, Exec::parallel);
    CHECK(bit_equal(ser, par));
  }
}

TEST_CASE("friedrichs_constant") {
  CHECK(std::abs(friedrichs_constant(space(1.0, 512)) - 1 / M_PI) < 1e-4);
  CHECK(std::abs(friedrichs_constant(space(2.0, 512)) - 2 / M_PI) < 1e-3);
  // Single DOF: mass 1/3, stiffness 4, lambda_F = sqrt(1/12).
  CHECK(friedrichs_constant(space(1.0, 2)) == doctest::Approx(std::sqrt(1.0 / 12.0)).epsilon(1e-14));
  // Brute-force oracle: Rayleigh quotient over random vectors never exceeds it.
  const P1Space s = space(1.0, 12);
  const double lf = friedrichs_constant(s);
  testing::Uniform u(3);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> c(s.dof_count());
    for (double& x : c) x = u();
    const Norms nm = norms(s.expand(c));
    CHECK(nm.l2 <= lf * nm.h1_semi * (1 + 1e-12));
  }
}

TEST_CASE("certify_lax_milgram examples") {
  const P1Space s = space(1.0, 512);
  const AssembledForm pure = assemble(s, CoefficientField::constant(1.0, 0.0), FractionalOrder(0.5), 1);
  const LaxMilgramCertificate c0 = certify_lax_milgram(pure);
  CHECK(std::abs(c0.k2_estimate - M_PI * M_PI / (1 + M_PI * M_PI)) < 1e-3);
  CHECK(c0.k1_estimate <= 1.0 + 1e-12);
  CHECK(c0.k1_estimate >= c0.k2_estimate);
  CHECK(c0.lambda_used == doctest::Approx(friedrichs_constant(s)));
  CHECK(c0.k2_predicted == doctest::Approx(std::min(1.0, 0.0)));

  const P1Space s64 = space(1.0, 64);
  const AssembledForm f0 = assemble(s64, CoefficientField::constant(1.0, 0.0), FractionalOrder(0.5), 1);
  const AssembledForm f1 = assemble(s64, CoefficientField::constant(1.0, 1.0), FractionalOrder(0.5), 1);
  const LaxMilgramCertificate k0 = certify_lax_milgram(f0), k1 = certify_lax_milgram(f1, 0.5);
  CHECK(k1.k2_estimate >= k0.k2_estimate - 1e-10);
  CHECK(k1.accretivity_margin >= -1e-10);
  CHECK(k1.lambda_used == 0.5);
  CHECK(k1.k2_predicted == doctest::Approx(std::min(1.0, 1.0 / 0.25)));

  // Coercivity and boundedness spot checks on random vectors.
  const Matrix k = f1.system();
  testing::Uniform u(99);
  for (int t = 0; t < 100; ++t) {
    Vector v(k.rows()), w(k.rows());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      v(i) = u();
      w(i) = u();
    }
    const double nv = std::sqrt(v.dot(f1.gram_h10 * v)), nw = std::sqrt(w.dot(f1.gram_h10 * w));
    CHECK(v.dot(k * v) >= k1.k2_estimate * nv * nv * (1 - 1e-10));
    CHECK(std::abs(w.dot(k * v)) <= k1.k1_estimate * nv * nw * (1 + 1e-10));
  }

  AssembledForm broken = f0;
  broken.gram_h10 = -broken.gram_h10;
  CHECK_THROWS_AS(certify_lax_milgram(broken), ConsistencyError);
}

TEST_CASE("solve_bvp examples") {
  const auto zero = solve_bvp(poisson(1.0, 0.5, [](double) { return 0.0; }), 64);
  CHECK(norms(zero.solution).h1 < 1e-10);

  // Poisson: P1 Galerkin is nodally exact in 1D for constant a.
  double prev = 0.0;
  for (std::size_t n : {16u, 32u, 64u}) {
    const auto r = solve_bvp(poisson(0.0, 0.5, [](double) { return 1.0; }), n, {.certify = false});
    double err = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      const double x = r.solution.grid().node(i);
      err = std::max(err, std::abs(r.solution[i] - x * (1 - x) / 2));
    }
    CHECK(err < 1e-13);
    CHECK(!r.certificate.has_value());
    prev = err;
  }
  (void)prev;

  const auto frac = solve_bvp(poisson(1.0, 0.5, [](double x) { return std::sin(M_PI * x); }), 128);
  CHECK(frac.residual <= 1e-10 * frac.residual_scale);
  REQUIRE(frac.certificate.has_value());
  CHECK(frac.certificate->k2_estimate > 0.0);
  CHECK(frac.certificate->k1_estimate >= frac.certificate->k2_estimate);

  // Galerkin orthogonality checked independently of the solver's own residual.
  const Vector r = frac.form.system() * frac.coefficients - frac.load;
  CHECK(r.cwiseAbs().maxCoeff() <= 1e-10 * frac.residual_scale);

  // Deterministic: two identical solves agree bit for bit.
  const auto again = solve_bvp(poisson(1.0, 0.5, [](double x) { return std::sin(M_PI * x); }), 128);
  CHECK(testing::bit_equal(frac.solution, again.solution));
}

TEST_CASE("solve_assembled detects a singular system") {
  const P1Space s = space(1.0, 8);
  AssembledForm f = assemble(s, CoefficientField::constant(1.0, 0.0), FractionalOrder(0.5), 1);
  f.diffusion.setZero();
  CHECK_THROWS_AS(solve_assembled(s, f, Vector::Ones(7)), SolvabilityError);
}

TEST_CASE("assemble_load") {
  const P1Space s = space(1.0, 10);
  const Vector b = assemble_load(s, [](double) { return 1.0; });
  for (Eigen::Index i = 0; i < b.size(); ++i) CHECK(b(i) == doctest::Approx(0.1).epsilon(1e-14));
  // int x phi_i = x_i h for interior hats on a uniform grid
  const Vector bx = assemble_load(s, [](double x) { return x; });
  for (Eigen::Index i = 0; i < bx.size(); ++i) CHECK(bx(i) == doctest::Approx((i + 1) * 0.01).epsilon(1e-13));
}

TEST_CASE("h2_probe examples") {
  const GridPtr g = build_mesh(1.0, 160);
  const GridFunction zero(g);
  const RegularityReport r0 = h2_probe(zero, zero, {0.05, 0.025, 0.0125});
  for (double q : r0.quotient_norms) CHECK(q == 0.0);

  const auto sol = solve_bvp(poisson(0.0, 0.5, [](double) { return 1.0; }), 160, {.certify = false});
  const GridFunction f = interpolate([](double) { return 1.0; }, g);
  const RegularityReport r = h2_probe(sol.solution, f, {0.05, 0.025, 0.0125});
  // Delta^h z' = -1 on [0.2, 0.8], so the L2 norm over that subdomain is sqrt(0.6).
  for (double q : r.quotient_norms) CHECK(q == doctest::Approx(std::sqrt(0.6)).epsilon(1e-9));
  for (std::size_t i = 1; i < r.ratios.size(); ++i)
    CHECK(std::abs(r.ratios[i] / r.ratios[i - 1] - 1) < 0.05);

  const auto fsol = solve_bvp(poisson(1.0, 0.5, [](double x) { return std::exp(x); }), 200, {.certify = false});
  const GridFunction ff = interpolate([](double x) { return std::exp(x); }, fsol.solution.grid_ptr());
  const RegularityReport rf = h2_probe(fsol.solution, ff, {0.08, 0.04, 0.02, 0.01});
  const auto [mn, mx] = std::minmax_element(rf.ratios.begin(), rf.ratios.end());
  CHECK(*mn > 0.0);
  CHECK(*mx <= 2 * *mn);

  CHECK_THROWS_AS(h2_probe(zero, zero, {0.15}), DomainError);
  CHECK_THROWS_AS(h2_probe(zero, zero, {0.0123}), DomainError);
  CHECK_THROWS_AS(h2_probe(zero, zero, {0.01, 0.02}), DomainError);
  const GridFunction graded(build_mesh(1.0, 20, {Grading::graded, 2.0}));
  CHECK_THROWS_AS(h2_probe(graded, graded, {0.01}), DomainError);
}

TEST_CASE("write_coordinate") {
  Matrix m = Matrix::Zero(2, 3);
  m(0, 1) = 0.5;
  m(1, 2) = -1.0 / 3.0;
  std::ostringstream out;
  write_coordinate(out, m);
  CHECK(out.str() == "0 1 0.5\n1 2 -0.33333333333333331\n");
}
