#pragma once

// Configuration-driven front end: strict JSON run descriptions, task
// dispatch and report files.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fracvar/expression.hpp"
#include "fracvar/variational.hpp"

namespace fracvar::cli {

enum class Task { solve, verify, convergence, scan };

Task parse_task(const std::string& name);
const char* to_string(Task task) noexcept;

struct RunConfig {
  Task task = Task::solve;
  double d = 1.0;
  double alpha = 0.5;
  int n = 1;
  std::size_t intervals = 256;
  std::vector<std::size_t> n_list{64, 128, 256, 512};
  Expr a_expr;
  Expr p_expr;
  Expr f_expr;
  std::optional<Expr> z_star;
  std::optional<double> lambda_used;
  double lipschitz_lambda = 1.0;
  Grading grading = Grading::uniform;
  Exec exec = default_exec;
  // scan
  double beta = 1e-3;
  double q = 2.5;
  std::vector<double> delta_grid;
  std::size_t family_size = 20;
  // convergence
  double min_l2_rate = 1.8;
  std::uint64_t seed = 12345;
  std::filesystem::path out_dir = ".";
  // Sampled bounds of the coefficient fields, filled in by validation.
  double a0 = 0.0;
  double p0 = 0.0;
};

/// Parses and validates a JSON document. Unknown keys, out-of-range values
/// and non-positive coefficient minima are rejected with the field named.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

/// Checks the problem invariants and samples a0, p0 on the working grid.
void validate(RunConfig& config);

/// Dispatches the task, writes its artifacts under config.out_dir and
/// returns 0 iff every checked invariant passed, 1 otherwise.
int run(const RunConfig& config);

/// Structured error record {"error": {"kind": ..., "message": ...}}.
std::string error_record(const std::exception& e);

}  // namespace fracvar::cli
