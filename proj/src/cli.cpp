#include "fracvar/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "fracvar/verification.hpp"

namespace fracvar::cli {
namespace {

using nlohmann::json;

const std::vector<std::string> kKeys = {
    "task", "d", "alpha", "n", "N", "N_list", "a", "p", "f", "z_star", "lambda_used", "lipschitz_lambda",
    "mesh", "exec", "beta", "q", "delta_grid", "family_size", "min_l2_rate", "seed",
};

double number_field(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

long long integer_field(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(std::string("field '") + key + "' must be an integer");
  return v.get<long long>();
}

std::string string_field(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_string()) throw ConfigError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

Expr expression_field(const json& j, const char* key) {
  const std::string text = string_field(j, key);
  try {
    return parse_expression(text);
  } catch (const ParseError& e) {
    throw ParseError(std::string("field '") + key + "': " + e.what(), e.offset(), e.expected());
  }
}

std::size_t positive_count(long long v, const char* key, long long minimum) {
  if (v < minimum) {
    std::ostringstream msg;
    msg << "field '" << key << "' = " << v << " must be at least " << minimum;
    throw ConfigError(msg.str());
  }
  return static_cast<std::size_t>(v);
}

// Evaluation failures inside a field are reported against that field.
ScalarField named_field(const Expr& e, const std::string& name) {
  ScalarField f = to_field(e);
  return [f, name](double x) {
    try {
      return f(x);
    } catch (const DataError& err) {
      throw DataError("field '" + name + "': " + err.what());
    }
  };
}

std::size_t working_intervals(const RunConfig& c) {
  std::size_t m = c.intervals;
  for (std::size_t n : c.n_list) m = std::max(m, n);
  return m;
}

CoefficientField coefficient_field(const RunConfig& c, const RayGrid& grid) {
  CoefficientField coeffs =
      CoefficientField::sampled(named_field(c.a_expr, "a"), named_field(c.p_expr, "p"), grid, c.lipschitz_lambda);
  try {
    coeffs.a_prime = named_field(differentiate(c.a_expr), "a'");
  } catch (const ConfigError&) {
    // Left empty; only the tasks that form (a u')' pointwise need it.
  }
  return coeffs;
}

ProblemSpec problem(const RunConfig& c, const RayGrid& grid) {
  ProblemSpec spec;
  spec.d = c.d;
  spec.alpha = FractionalOrder(c.alpha);
  spec.n = c.n;
  spec.coeffs = coefficient_field(c, grid);
  spec.rhs = named_field(c.f_expr, "f");
  return spec;
}

verify::SmoothFunction smooth_from(const Expr& e, const std::string& name) {
  const Expr d1 = differentiate(e);
  const Expr d2 = differentiate(d1);
  return {named_field(e, name), named_field(d1, name + "'"), named_field(d2, name + "''")};
}

std::ofstream open_output(const RunConfig& c, const std::string& file) {
  std::filesystem::create_directories(c.out_dir);
  const auto path = c.out_dir / file;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file " + path.string());
  spdlog::info("writing {}", path.string());
  return out;
}

json residual_json(const verify::IdentityResidual& r) {
  return {{"name", r.name}, {"residual", r.residual}, {"tolerance", r.tolerance}, {"pass", r.pass}};
}

int run_solve(const RunConfig& c) {
  const GridPtr grid = build_mesh(c.d, c.intervals, MeshOptions{c.grading});
  const ProblemSpec spec = problem(c, *grid);
  SolveOptions options;
  options.exec = c.exec;
  options.mesh = MeshOptions{c.grading};
  options.lambda_used = c.lambda_used;
  const BvpSolution sol = solve_bvp(spec, c.intervals, options);
  {
    std::ofstream out = open_output(c, "solution.csv");
    out << "node,value\n";
    for (std::size_t i = 0; i < sol.solution.size(); ++i)
      out << verify::format_double(sol.solution.grid().node(i)) << ',' << verify::format_double(sol.solution[i])
          << '\n';
  }
  const LaxMilgramCertificate& cert = *sol.certificate;
  const bool coercive = cert.k2_estimate > 0.0;
  const bool galerkin = sol.residual <= 1e-10 * std::max(1.0, sol.residual_scale);
  json j = {{"k1_estimate", cert.k1_estimate},
            {"k2_estimate", cert.k2_estimate},
            {"k2_predicted", cert.k2_predicted},
            {"accretivity_margin", cert.accretivity_margin},
            {"lambda_used", cert.lambda_used},
            {"a0", c.a0},
            {"p0", c.p0},
            {"N", c.intervals},
            {"galerkin_residual", sol.residual},
            {"residual_scale", sol.residual_scale},
            {"pass", coercive && galerkin}};
  open_output(c, "certificate.json") << j.dump(2) << '\n';
  return coercive && galerkin ? 0 : 1;
}

GridFunction bump(const GridPtr& grid, double center, double width) {
  return interpolate(
      [=](double x) {
        const double y = (x - center) / width;
        return std::abs(y) < 1.0 ? std::exp(-1.0 / (1.0 - y * y)) : 0.0;
      },
      grid);
}

int run_verify(const RunConfig& c) {
  // The difference-quotient identity needs shifts that land on nodes, so the
  // checks use a uniform grid regardless of the configured mesh.
  const GridPtr grid = build_mesh(c.d, c.intervals);
  const std::size_t nodes = grid->node_count();
  const ProblemSpec spec = problem(c, *grid);
  std::mt19937_64 rng(c.seed);
  auto uniform = [&] { return 2.0 * std::ldexp(static_cast<double>(rng() >> 11), -53) - 1.0; };
  std::vector<verify::IdentityResidual> entries;

  {
    GridFunction v(grid), u(grid);
    for (std::size_t i = 0; i < nodes; ++i) {
      const double x = grid->node(i);
      if (x > 0.25 * c.d && x < 0.75 * c.d) v[i] = uniform();
      if (i > 0 && i + 1 < nodes) u[i] = uniform();
    }
    entries.push_back(verify::sbp_test(v, u, DifferenceStep(2.0 * grid->spacing(0))));
  }
  {
    if (!spec.coeffs.a_prime) throw ConfigError("verify: field 'a' must be differentiable within the grammar");
    const Expr u_expr = c.z_star ? *c.z_star : parse_expression("sin(pi*x)");
    const verify::SmoothFunction u = smooth_from(u_expr, "z_star");
    GridFunction v(grid);
    for (std::size_t i = 1; i + 1 < nodes; ++i) v[i] = uniform();
    double du_sup = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) du_sup = std::max(du_sup, std::abs(u.d1(grid->node(i))));
    // Cauchy-Schwarz bound on |int a v' u'| sets the scale of the residual.
    const double scale = spec.coeffs.a_sup * norms(v).h1_semi * du_sup * std::sqrt(c.d);
    entries.push_back(verify::greens_test(u, v, spec.coeffs, 1e-10 * std::max(scale, 1e-300), 5));
  }
  const P1Space space(grid);
  const FractionalOrder alpha(c.alpha);
  // The adjoint pairing is the unweighted (n = 1) identity; accretivity is
  // checked for the configured dimension.
  const Matrix fractional = assemble_fractional(space, spec.coeffs, alpha, 1, c.exec);
  {
    const GridFunction v = bump(grid, 0.4 * c.d, 0.2 * c.d);
    const GridFunction u = bump(grid, 0.55 * c.d, 0.25 * c.d);
    const verify::AdjointCheck adj = verify::adjoint_check(space, spec.coeffs, alpha, v, u, 0.0, &fractional);
    entries.push_back(verify::make_residual("adjoint", adj.relative_error, 1e-3));
  }
  {
    const Matrix mass = assemble_mass(space);
    const Matrix weighted = c.n == 1 ? fractional : assemble_fractional(space, spec.coeffs, alpha, c.n, c.exec);
    const double margin = verify::accretivity_margin(weighted, mass);
    entries.push_back(verify::make_residual("accretivity", std::max(0.0, -margin), 1e-10));
  }
  bool pass = true;
  json list = json::array();
  for (const auto& e : entries) {
    pass = pass && e.pass;
    list.push_back(residual_json(e));
    spdlog::info("{}: residual {:.3e} tolerance {:.3e} {}", e.name, e.residual, e.tolerance, e.pass ? "pass" : "FAIL");
  }
  json j = {{"N", c.intervals}, {"alpha", c.alpha}, {"seed", c.seed}, {"entries", list}, {"pass", pass}};
  open_output(c, "verify.json") << j.dump(2) << '\n';
  return pass ? 0 : 1;
}

int run_convergence(const RunConfig& c) {
  if (!c.z_star) throw ConfigError("convergence task needs field 'z_star'");
  const GridPtr grid = build_mesh(c.d, working_intervals(c), MeshOptions{c.grading});
  ProblemSpec spec = problem(c, *grid);
  const verify::SmoothFunction z = smooth_from(*c.z_star, "z_star");
  for (double x : {0.0, c.d}) {
    if (std::abs(z.value(x)) > 1e-12) {
      std::ostringstream msg;
      msg << "field 'z_star' must vanish at x = " << x << " (value " << z.value(x) << ")";
      throw ConfigError(msg.str());
    }
  }
  verify::ManufacturedOptions options;
  options.solve.exec = c.exec;
  options.solve.mesh = MeshOptions{c.grading};
  const verify::ConvergenceTable table = verify::manufactured_convergence(spec, z, c.n_list, options);
  {
    std::ofstream out = open_output(c, "convergence.csv");
    verify::write_csv(out, table);
  }
  bool finite = true;
  for (const auto& row : table.rows) finite = finite && std::isfinite(row.l2_error) && std::isfinite(row.h1_error);
  const double rate = table.last_l2_rate();
  spdlog::info("observed L2 rate {:.3f} (required {:.3f})", rate, c.min_l2_rate);
  return finite && rate >= c.min_l2_rate ? 0 : 1;
}

int run_scan(const RunConfig& c) {
  const GridPtr grid = build_mesh(c.d, c.intervals);
  std::vector<double> deltas = c.delta_grid;
  if (deltas.empty())
    for (int k = 1; k <= 10; ++k) deltas.push_back(std::ldexp(1.0, -k));
  const auto family = verify::random_h10_family(grid, c.family_size, c.seed);
  verify::ScanReport report = verify::embedding_scan(family, FractionalOrder(c.alpha), c.q, c.beta, deltas, c.exec);
  report.seed = c.seed;
  if (c.alpha > 0.5 && !report.satisfies_window)
    spdlog::warn("q = {} lies outside the window 2 < q < 2/(2 alpha - 1); scanning anyway", c.q);
  {
    std::ofstream out = open_output(c, "scan.csv");
    verify::write_csv(out, report);
  }
  const bool pass = std::isfinite(report.fitted_k);
  json j = {{"alpha", report.alpha},
            {"beta", report.beta},
            {"q_exponent", report.q_exponent},
            {"nu", report.nu},
            {"delta_grid", report.delta_grid},
            {"fitted_K", report.fitted_k},
            {"worst_ratio", report.worst_ratio},
            {"satisfies_mapping_range", report.satisfies_mapping_range},
            {"satisfies_window", report.satisfies_window},
            {"seed", report.seed},
            {"family_size", report.family_size},
            {"pass", pass}};
  open_output(c, "scan.json") << j.dump(2) << '\n';
  return pass ? 0 : 1;
}

}  // namespace

Task parse_task(const std::string& name) {
  if (name == "solve") return Task::solve;
  if (name == "verify") return Task::verify;
  if (name == "convergence") return Task::convergence;
  if (name == "scan") return Task::scan;
  throw ConfigError("field 'task' = '" + name + "' must be one of solve, verify, convergence, scan");
}

const char* to_string(Task task) noexcept {
  switch (task) {
    case Task::solve: return "solve";
    case Task::verify: return "verify";
    case Task::convergence: return "convergence";
    case Task::scan: return "scan";
  }
  return "?";
}

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& item : j.items())
    if (std::find(kKeys.begin(), kKeys.end(), item.key()) == kKeys.end())
      throw ConfigError("unknown configuration key '" + item.key() + "'");

  RunConfig c;
  if (j.contains("task")) c.task = parse_task(string_field(j, "task"));
  if (j.contains("d")) c.d = number_field(j, "d");
  if (j.contains("alpha")) c.alpha = number_field(j, "alpha");
  if (j.contains("n")) c.n = static_cast<int>(positive_count(integer_field(j, "n"), "n", 1));
  if (j.contains("N")) c.intervals = positive_count(integer_field(j, "N"), "N", 2);
  if (j.contains("N_list")) {
    if (!j["N_list"].is_array() || j["N_list"].empty()) throw ConfigError("field 'N_list' must be a non-empty array");
    c.n_list.clear();
    for (const auto& v : j["N_list"]) {
      if (!v.is_number_integer()) throw ConfigError("field 'N_list' must hold integers");
      c.n_list.push_back(positive_count(v.get<long long>(), "N_list", 2));
    }
  }
  c.a_expr = j.contains("a") ? expression_field(j, "a") : parse_expression("1");
  c.p_expr = j.contains("p") ? expression_field(j, "p") : parse_expression("1");
  c.f_expr = j.contains("f") ? expression_field(j, "f") : parse_expression("1");
  if (j.contains("z_star")) c.z_star = expression_field(j, "z_star");
  if (j.contains("lambda_used")) c.lambda_used = number_field(j, "lambda_used");
  if (j.contains("lipschitz_lambda")) c.lipschitz_lambda = number_field(j, "lipschitz_lambda");
  if (j.contains("mesh")) {
    const std::string m = string_field(j, "mesh");
    if (m == "uniform") c.grading = Grading::uniform;
    else if (m == "graded") c.grading = Grading::graded;
    else throw ConfigError("field 'mesh' must be 'uniform' or 'graded'");
  }
  if (j.contains("exec")) {
    const std::string e = string_field(j, "exec");
    if (e == "serial") c.exec = Exec::serial;
    else if (e == "parallel") c.exec = Exec::parallel;
    else throw ConfigError("field 'exec' must be 'serial' or 'parallel'");
  }
  if (j.contains("beta")) c.beta = number_field(j, "beta");
  if (j.contains("q")) c.q = number_field(j, "q");
  if (j.contains("delta_grid")) {
    if (!j["delta_grid"].is_array()) throw ConfigError("field 'delta_grid' must be an array");
    for (const auto& v : j["delta_grid"]) {
      if (!v.is_number()) throw ConfigError("field 'delta_grid' must hold numbers");
      c.delta_grid.push_back(v.get<double>());
    }
  }
  if (j.contains("family_size")) c.family_size = positive_count(integer_field(j, "family_size"), "family_size", 1);
  if (j.contains("min_l2_rate")) c.min_l2_rate = number_field(j, "min_l2_rate");
  if (j.contains("seed")) {
    const json& s = j["seed"];
    if (!s.is_number_integer() || s.get<long long>() < 0) throw ConfigError("field 'seed' must be a nonnegative integer");
    c.seed = s.get<std::uint64_t>();
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void validate(RunConfig& c) {
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) {
    std::ostringstream msg;
    msg << "field 'alpha' = " << c.alpha << " violates the constraint 0 < alpha < 1";
    throw ConfigError(msg.str());
  }
  if (!(c.d > 0.0) || !std::isfinite(c.d)) throw ConfigError("field 'd' must be a positive length");
  if (c.lambda_used && !(*c.lambda_used > 0.0)) throw ConfigError("field 'lambda_used' must be positive");
  if (!(c.lipschitz_lambda > c.alpha && c.lipschitz_lambda <= 1.0))
    throw ConfigError("field 'lipschitz_lambda' must satisfy alpha < lambda <= 1");
  for (std::size_t i = 1; i < c.n_list.size(); ++i)
    if (c.n_list[i] <= c.n_list[i - 1]) throw ConfigError("field 'N_list' must be strictly increasing");
  if (!(c.q > 2.0)) throw ConfigError("field 'q' must exceed 2");
  for (double delta : c.delta_grid)
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("field 'delta_grid' values must lie in (0, 1)");

  const GridPtr grid = build_mesh(c.d, working_intervals(c), MeshOptions{c.grading});
  CoefficientField coeffs;
  try {
    coeffs = coefficient_field(c, *grid);
  } catch (const EllipticityError& e) {
    const std::string what = e.what();
    const std::string field = what.find("coefficient a") != std::string::npos ? "a" : "p";
    throw EllipticityError("field '" + field + "': " + what);
  }
  // Positivity of the lower-order weight is part of the problem class.
  if (!(coeffs.p0 > 0.0)) {
    std::ostringstream msg;
    msg << "field 'p': sampled minimum p0 = " << coeffs.p0 << " must be positive";
    throw EllipticityError(msg.str());
  }
  c.a0 = coeffs.a0;
  c.p0 = coeffs.p0;
}

int run(const RunConfig& c) {
  spdlog::info("task {} d = {} alpha = {} n = {} a0 = {} p0 = {}", to_string(c.task), c.d, c.alpha, c.n, c.a0, c.p0);
  switch (c.task) {
    case Task::solve: return run_solve(c);
    case Task::verify: return run_verify(c);
    case Task::convergence: return run_convergence(c);
    case Task::scan: return run_scan(c);
  }
  return 1;
}

std::string error_record(const std::exception& e) {
  std::string kind = "internal";
  if (const auto* err = dynamic_cast<const Error*>(&e)) kind = fracvar::to_string(err->kind());
  json j = {{"error", {{"kind", kind}, {"message", e.what()}}}};
  if (const auto* pe = dynamic_cast<const ParseError*>(&e)) {
    j["error"]["offset"] = pe->offset();
    j["error"]["expected"] = pe->expected();
  }
  return j.dump();
}

}  // namespace fracvar::cli
