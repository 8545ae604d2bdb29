// Command-line entry point: fracvar --config run.json [--task T] [--out DIR] [--seed S]

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fracvar/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Galerkin solver and verification driver for fractional elliptic problems"};
  std::string config_path;
  std::string task;
  std::string out_dir;
  long long seed = -1;
  app.add_option("--config", config_path, "JSON run description")->required()->check(CLI::ExistingFile);
  app.add_option("--task", task, "Override the task: solve, verify, convergence, scan");
  app.add_option("--out", out_dir, "Directory for report files (default: current directory)");
  app.add_option("--seed", seed, "Override the seed of random families")->check(CLI::NonNegativeNumber);
  CLI11_PARSE(app, argc, argv);

  auto logger = spdlog::stderr_color_mt("fracvar");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("FRACVAR_LOG")) spdlog::set_level(spdlog::level::from_str(level));

  try {
    fracvar::cli::RunConfig config = fracvar::cli::load_config(config_path);
    if (!task.empty()) config.task = fracvar::cli::parse_task(task);
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
    return fracvar::cli::run(config);
  } catch (const std::exception& e) {
    std::cout << fracvar::cli::error_record(e) << std::endl;
    return 2;
  }
}
