#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fracvar/verification.hpp"
#include "support.hpp"

using namespace fracvar;
using namespace fracvar::verify;
using testing::rel_err;

namespace {

double bump_phi(double x) { return testing::bump(x, 0.5, 0.3); }

SmoothFunction quadratic() {
  return {[](double x) { return x * (1 - x); }, [](double x) { return 1 - 2 * x; }, [](double) { return -2.0; }};
}

SmoothFunction sine() {
  return {[](double x) { return std::sin(M_PI * x); }, [](double x) { return M_PI * std::cos(M_PI * x); },
          [](double x) { return -M_PI * M_PI * std::sin(M_PI * x); }};
}

ProblemSpec spec_with(double p, double alpha = 0.5) {
  ProblemSpec s;
  s.alpha = FractionalOrder(alpha);
  s.coeffs = CoefficientField::constant(1.0, p);
  return s;
}

}  // namespace

TEST_CASE("oracle examples") {
  OracleSpec m;
  const auto c = oracle_derivative([](double) { return 1.0; }, FractionalOrder(0.5), {0.5}, 16, m);
  CHECK(std::abs(c[0] - std::sqrt(2.0 / M_PI)) < 1e-9);
  const auto lin = oracle_derivative([](double r) { return 1 - r; }, FractionalOrder(0.5), {0.5}, 16, m);
  CHECK(std::abs(lin[0] - std::sqrt(0.5) / std::tgamma(1.5)) < 1e-9);

  OracleSpec k;
  k.op = OracleOperator::kipriyanov_left;
  const double want = 2.0 / std::tgamma(2.75) * std::pow(0.3, 1.75);
  const auto sq = oracle_derivative([](double r) { return r * r; }, FractionalOrder(0.25), {0.3}, 16, k);
  CHECK(rel_err(sq[0], want) < 1e-9);
  // Independent of the starting resolution.
  const auto sq_fine = oracle_derivative([](double r) { return r * r; }, FractionalOrder(0.25), {0.3}, 256, k);
  CHECK(rel_err(sq_fine[0], want) < 1e-9);

  // Kipriyanov with n = 2 on r: weight (t/r) gives alpha/G(1-a) int (r-t)^{-a} t/r + C_2 r^{1-a}.
  OracleSpec k2 = k;
  k2.n = 2;
  const double a = 0.5, r = 0.7;
  const double integral = a / std::tgamma(1 - a) * std::tgamma(1 - a) * std::tgamma(2.0) / std::tgamma(3 - a) *
                          std::pow(r, 1 - a);
  const double want2 = integral + gamma_coefficient(2, FractionalOrder(a)) * std::pow(r, 1 - a);
  const auto lin2 = oracle_derivative([](double t) { return t; }, FractionalOrder(a), {r}, 16, k2);
  CHECK(rel_err(lin2[0], want2) < 1e-9);

  OracleSpec starved;
  starved.max_points = 64;
  CHECK_THROWS_AS(oracle_derivative([](double x) { return std::sin(40 * x); }, FractionalOrder(0.5), {0.2}, 16,
                                    starved),
                  OracleError);
}

TEST_CASE("sbp_test examples") {
  testing::Uniform u(5);
  const GridPtr g = build_mesh(1.0, 128);
  const DifferenceStep step(2.0 / 128);
  for (int t = 0; t < 25; ++t) {
    const GridFunction v = testing::random_function(g, u, 0.1, 0.9);
    const GridFunction w = testing::random_function(g, u, 0.0, 1.0);
    const IdentityResidual r = sbp_test(v, w, step);
    CHECK(r.pass);
    CHECK(r.residual <= r.tolerance);
  }
  const GridFunction zero(g);
  const GridFunction w = testing::random_function(g, u, 0.0, 1.0);
  const IdentityResidual z = sbp_test(zero, w, step);
  CHECK(z.residual == 0.0);
  CHECK(z.pass);

  const GridFunction edge = testing::random_function(g, u, 0.0, 0.5);
  CHECK_THROWS_AS(sbp_test(edge, w, step), DomainError);
  // margin exactly 2h is also a violation (strict inequality)
  GridFunction tight(g);
  tight[5] = 1.0;  // support [4/128, 6/128], margin 4/128 = 2h
  CHECK_THROWS_AS(sbp_test(tight, w, step), DomainError);
}

TEST_CASE("make_residual") {
  CHECK(make_residual("x", 1.0, 1.0).pass);
  CHECK_FALSE(make_residual("x", 1.1, 1.0).pass);
  CHECK_FALSE(make_residual("x", std::nan(""), 1.0).pass);
}

TEST_CASE("greens_test examples") {
  const CoefficientField one = CoefficientField::constant(1.0, 0.0);
  const GridPtr g = build_mesh(1.0, 8);
  for (std::size_t j = 1; j < 8; ++j) {
    GridFunction hat(g);
    hat[j] = 1.0;
    const IdentityResidual r = greens_test(quadratic(), hat, one, 1e-12);
    CHECK(r.residual < 1e-12);
  }
  const IdentityResidual z = greens_test(sine(), GridFunction(g), one, 0.0);
  CHECK(z.residual == 0.0);

  // Midpoint rule on sin(pi x): residual drops by ~4 per halving.
  auto residual = [&](std::size_t n) {
    const GridFunction v = interpolate([](double x) { return x * x * (1 - x); }, build_mesh(1.0, n));
    return greens_test(sine(), v, one, 1.0).residual;
  };
  const double r32 = residual(32), r64 = residual(64), r128 = residual(128);
  CHECK(std::log2(r32 / r64) >= 1.9);
  CHECK(std::log2(r64 / r128) >= 1.9);
  CHECK(r32 / r64 == doctest::Approx(4.0).epsilon(0.05));

  // Variable coefficient with its derivative, high-order rule: residual tiny.
  CoefficientField var = CoefficientField::sampled([](double x) { return 1 + x * x; }, [](double) { return 0.0; }, *g);
  var.a_prime = [](double x) { return 2 * x; };
  const GridFunction v = interpolate([](double x) { return std::sin(M_PI * x); }, build_mesh(1.0, 64));
  CHECK(greens_test(sine(), v, var, 1e-10, 5).pass);
}

TEST_CASE("coincidence_test") {
  const ConvergenceTable zero = coincidence_test([](double) { return 0.0; }, FractionalOrder(0.5), {64, 128});
  for (const auto& row : zero.rows) CHECK(row.l2_error == 0.0);

  const ConvergenceTable t = coincidence_test(bump_phi, FractionalOrder(0.5), {256, 512, 1024});
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[2].l2_error / t.rows[2].reference < 1e-2);
  CHECK(t.min_l2_rate() >= 0.9);
  for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(t.rows[i].l2_error <= 1.05 * t.rows[i - 1].l2_error);

  CoincidenceOptions low_p;
  low_p.limit.p_exponent = 1.2;
  for (double alpha : {0.25, 0.75}) {
    const ConvergenceTable ta = coincidence_test(bump_phi, FractionalOrder(alpha), {128, 256, 512}, low_p);
    CHECK(ta.rows.back().l2_error < ta.rows.front().l2_error);
    CHECK(ta.rows.back().l2_error / ta.rows.back().reference < 5e-2);
  }
}

TEST_CASE("convergence table rates") {
  ConvergenceTable t;
  t.rows = {{64, 1.0, 2.0, 1.0, std::nan(""), std::nan("")},
            {128, 0.25, 1.0, 1.0, 2.0, 1.0},
            {256, 0.0625, 0.5, 1.0, 2.0, 1.0}};
  CHECK(t.last_l2_rate() == doctest::Approx(2.0));
  CHECK(t.last_h1_rate() == doctest::Approx(1.0));
  CHECK(t.fitted_l2_rate() == doctest::Approx(2.0));
  CHECK(t.fitted_h1_rate() == doctest::Approx(1.0));
  CHECK(t.min_l2_rate() == doctest::Approx(2.0));
}

TEST_CASE("embedding_scan") {
  const GridPtr g = build_mesh(1.0, 256);
  std::vector<double> deltas;
  for (int k = 1; k <= 10; ++k) deltas.push_back(std::ldexp(1.0, -k));

  const ScanReport z = embedding_scan({GridFunction(g)}, FractionalOrder(0.5), 2.5, 1e-3, deltas);
  CHECK(z.fitted_k == 0.0);

  const auto fam20 = random_h10_family(g, 20, 42);
  const auto fam40 = random_h10_family(g, 40, 42);
  // The first 20 members of the larger family are the smaller family.
  for (std::size_t i = 0; i < 20; ++i) CHECK(testing::bit_equal(fam20[i], fam40[i]));
  for (const auto& f : fam20) {
    CHECK(f[0] == 0.0);
    CHECK(f[256] == doctest::Approx(0.0).scale(1.0));
  }

  const ScanReport r20 = embedding_scan(fam20, FractionalOrder(0.5), 2.5, 1e-3, deltas);
  const ScanReport r40 = embedding_scan(fam40, FractionalOrder(0.5), 2.5, 1e-3, deltas);
  CHECK(std::isfinite(r20.fitted_k));
  CHECK(std::abs(r40.fitted_k - r20.fitted_k) <= 0.1 * std::abs(r20.fitted_k));
  CHECK(r20.nu == doctest::Approx(0.5 - 0.4 + 0.5 + 1e-3));
  CHECK(r20.records.size() == 20 * deltas.size());
  CHECK(r20.satisfies_mapping_range);
  CHECK(r20.satisfies_window);

  std::vector<GridFunction> doubled;
  for (const auto& f : fam20) doubled.push_back(2.0 * f);
  const ScanReport r2 = embedding_scan(doubled, FractionalOrder(0.5), 2.5, 1e-3, deltas);
  CHECK(r2.fitted_k == doctest::Approx(r20.fitted_k).epsilon(1e-12));

  // Serial and parallel produce the same report.
  const ScanReport rs = embedding_scan(fam20, FractionalOrder(0.5), 2.5, 1e-3, deltas, Exec::serial);
  CHECK(rs.fitted_k == r20.fitted_k);

  // With beta > 0, nu < 1 already forces q < 1/(alpha + beta - 1/2), which is
  // inside both printed q constraints, so a valid scan always satisfies them.
  const ScanReport w = embedding_scan(fam20, FractionalOrder(0.75), 3.0, 1e-3, deltas);
  CHECK(w.satisfies_window);
  CHECK(w.satisfies_mapping_range);
  CHECK_THROWS_AS(embedding_scan(fam20, FractionalOrder(0.75), 4.5, 1e-3, deltas), ConfigError);

  CHECK_THROWS_AS(embedding_scan(fam20, FractionalOrder(0.9), 2.5, 0.2, deltas), ConfigError);
  CHECK_THROWS_AS(embedding_scan(fam20, FractionalOrder(0.5), 2.0, 1e-3, deltas), ConfigError);
  CHECK_THROWS_AS(embedding_scan(fam20, FractionalOrder(0.5), 2.5, 1e-3, {0.5, 1.0}), ConfigError);
}

TEST_CASE("manufactured_convergence examples") {
  const std::vector<std::size_t> ns{64, 128, 256, 512};
  const ConvergenceTable poly = manufactured_convergence(spec_with(0.0), quadratic(), ns);
  CHECK(poly.last_l2_rate() == doctest::Approx(2.0).epsilon(0.02));

  const ConvergenceTable s = manufactured_convergence(spec_with(0.0), sine(), ns);
  CHECK(std::abs(s.fitted_l2_rate() - 2.0) <= 0.2);
  CHECK(std::abs(s.fitted_h1_rate() - 1.0) <= 0.2);

  const ConvergenceTable frac = manufactured_convergence(spec_with(1.0), quadratic(), ns);
  CHECK(frac.min_l2_rate() >= 1.8);

  // The right-hand side is -(z')' + p D^alpha z with D^alpha (x - x^2) in closed form.
  const ScalarField f = manufactured_rhs(spec_with(1.0), quadratic());
  for (double x : {0.1, 0.5, 0.9}) {
    const double d = std::pow(x, 0.5) / std::tgamma(1.5) - 2 * std::pow(x, 1.5) / std::tgamma(2.5);
    CHECK(rel_err(f(x), 2 + d) < 1e-9);
  }
}

TEST_CASE("adjoint_check and accretivity_margin") {
  const P1Space s(build_mesh(1.0, 256));
  const CoefficientField p = CoefficientField::sampled([](double) { return 1.0; },
                                                       [](double x) { return 1 + x / 2; }, s.grid());
  const FractionalOrder a(0.5);
  const GridFunction v = interpolate([](double x) { return testing::bump(x, 0.4, 0.3); }, s.grid_ptr());
  const GridFunction u = interpolate([](double x) { return testing::bump(x, 0.6, 0.3); }, s.grid_ptr());
  const AdjointCheck lim = adjoint_check(s, p, a, v, u, 0.0);
  CHECK(lim.relative_error < 1e-3);
  // Fixed radii: the error shrinks with eps like eps^{1-alpha}.
  const AdjointCheck e1 = adjoint_check(s, p, a, v, u, std::ldexp(1.0, -6));
  const AdjointCheck e2 = adjoint_check(s, p, a, v, u, std::ldexp(1.0, -8));
  CHECK(e2.relative_error < e1.relative_error);
  CHECK(e1.bilinear == e2.bilinear);

  const Matrix f = assemble_fractional(s, p, a, 1);
  CHECK(accretivity_margin(f, assemble_mass(s)) >= -1e-10);
  // A skew matrix has a zero symmetric part.
  Matrix skew = Matrix::Zero(3, 3);
  skew(0, 1) = 1;
  skew(1, 0) = -1;
  CHECK(std::abs(accretivity_margin(skew, Matrix::Identity(3, 3))) < 1e-15);
}

TEST_CASE("csv output and number formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-INFINITY) == "-inf");
  CHECK(std::stod(format_double(M_PI)) == M_PI);

  ConvergenceTable t;
  t.name = "demo";
  t.rows = {{8, 0.5, 1.0, 1.0, std::nan(""), std::nan("")}};
  std::ostringstream out;
  write_csv(out, t);
  const std::string text = out.str();
  CHECK(text.find('\n') != std::string::npos);
  CHECK(text.rfind("N,", 0) == 0);
}
