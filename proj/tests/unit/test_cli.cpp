#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>
#include <sys/wait.h>

#include "fracvar/cli.hpp"

using namespace fracvar;
using namespace fracvar::cli;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fracvar_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig config(const std::string& text, const fs::path& out) {
  RunConfig c = parse_config(text);
  c.out_dir = out;
  return c;
}

template <class E>
std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const E& e) {
    return e.what();
  }
  return "<no error>";
}

struct Process {
  int status;
  std::string stdout_text;
};

Process tool(const std::string& args, const fs::path& dir) {
  const fs::path captured = dir / "stdout.txt";
  const std::string cmd = std::string(FRACVAR_TOOL) + " " + args + " > " + captured.string() + " 2> /dev/null";
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(captured)};
}

}  // namespace

TEST_CASE("config examples") {
  const RunConfig c = parse_config(R"j({"alpha": 0.5, "a": "1", "p": "1", "f": "1", "task": "solve", "N": 256})j");
  CHECK(c.task == Task::solve);
  CHECK(c.intervals == 256);
  CHECK(c.a0 == 1.0);
  CHECK(c.p0 == 1.0);

  const RunConfig v = parse_config(R"j({"a": "1 + x", "p": "2 - x", "d": 1.5, "mesh": "graded", "exec": "serial",
                                       "N_list": [8, 16], "seed": 7, "lambda_used": 0.4})j");
  CHECK(v.a0 == 1.0);
  CHECK(v.p0 == doctest::Approx(0.5));
  CHECK(v.grading == Grading::graded);
  CHECK(v.exec == Exec::serial);
  CHECK(v.n_list == std::vector<std::size_t>{8, 16});
  CHECK(v.seed == 7);
  CHECK(*v.lambda_used == 0.4);

  CHECK(error_of<ConfigError>(R"j({"alpha": 1.5})j").find("0 < alpha < 1") != std::string::npos);
  CHECK(error_of<EllipticityError>(R"j({"p": "x-1"})j").find("field 'p'") != std::string::npos);
  CHECK(error_of<EllipticityError>(R"j({"p": "0"})j").find("field 'p'") != std::string::npos);
  CHECK(error_of<EllipticityError>(R"j({"a": "x - 0.5"})j").find("field 'a'") != std::string::npos);
  CHECK(error_of<ConfigError>(R"j({"alpah": 0.5})j").find("alpah") != std::string::npos);
  CHECK(error_of<ConfigError>(R"j({"N": 1})j").find("'N'") != std::string::npos);
  CHECK(error_of<ConfigError>(R"j({"N": "64"})j").find("'N'") != std::string::npos);
  CHECK(error_of<ConfigError>(R"j({"N_list": [64, 32]})j").find("N_list") != std::string::npos);
  CHECK(error_of<ConfigError>(R"j({"q": 2})j").find("'q'") != std::string::npos);
  CHECK(error_of<ConfigError>(R"j({"delta_grid": [0.5, 1.0]})j").find("delta_grid") != std::string::npos);
  CHECK(error_of<ConfigError>(R"j({"task": "plot"})j").find("task") != std::string::npos);
  CHECK(error_of<ConfigError>(R"j({"mesh": "random"})j").find("mesh") != std::string::npos);
  CHECK(error_of<ConfigError>(R"j({"seed": -1})j").find("seed") != std::string::npos);
  CHECK(error_of<ConfigError>(R"j({"lipschitz_lambda": 0.3})j").find("lipschitz_lambda") != std::string::npos);
  CHECK(error_of<ConfigError>("[1, 2]").find("JSON object") != std::string::npos);
  CHECK(error_of<ConfigError>("{").find("not valid JSON") != std::string::npos);
  CHECK(error_of<ParseError>(R"j({"f": "2*^x"})j").find("offset 2") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/run.json"), ConfigError);
}

TEST_CASE("solve task") {
  const fs::path out = scratch("solve");
  CHECK(run(config(R"j({"N": 64, "f": "sin(pi*x)"})j", out)) == 0);
  const json cert = json::parse(slurp(out / "certificate.json"));
  for (const char* key : {"k1_estimate", "k2_estimate", "k2_predicted", "accretivity_margin", "lambda_used"})
    CHECK(cert.contains(key));
  CHECK(cert["pass"] == true);
  CHECK(cert["k2_estimate"].get<double>() > 0.0);
  const std::string csv = slurp(out / "solution.csv");
  CHECK(csv.rfind("node,value\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 66);

  const fs::path zero = scratch("solve_zero");
  CHECK(run(config(R"j({"N": 16, "f": "0"})j", zero)) == 0);
  std::istringstream lines(slurp(zero / "solution.csv"));
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) CHECK(std::stod(line.substr(line.find(',') + 1)) == 0.0);
}

TEST_CASE("verify task") {
  const fs::path out = scratch("verify");
  CHECK(run(config(R"j({"task": "verify", "N": 128})j", out)) == 0);
  const json v = json::parse(slurp(out / "verify.json"));
  std::vector<std::string> names;
  for (const auto& e : v["entries"]) {
    names.push_back(e["name"]);
    CHECK(e["pass"] == true);
  }
  CHECK(names == std::vector<std::string>{"sbp", "greens", "adjoint", "accretivity"});
  CHECK(v["pass"] == true);
}

TEST_CASE("convergence task and exit status") {
  const fs::path out = scratch("convergence");
  const std::string base = R"j({"task": "convergence", "z_star": "x*(1-x)", "N_list": [32, 64, 128])j";
  CHECK(run(config(base + "}", out)) == 0);
  const std::string csv = slurp(out / "convergence.csv");
  CHECK(csv.rfind("N,l2_error", 0) == 0);
  // The same run with an unreachable rate threshold reports failure.
  CHECK(run(config(base + R"j(, "min_l2_rate": 2.5})j", scratch("convergence_strict"))) == 1);
  CHECK_THROWS_AS(run(config(R"j({"task": "convergence"})j", out)), ConfigError);
  CHECK_THROWS_AS(run(config(R"j({"task": "convergence", "z_star": "x"})j", out)), ConfigError);
}

TEST_CASE("scan task") {
  const fs::path out = scratch("scan");
  CHECK(run(config(R"j({"task": "scan", "N": 128, "family_size": 5})j", out)) == 0);
  const json s = json::parse(slurp(out / "scan.json"));
  CHECK(std::isfinite(s["fitted_K"].get<double>()));
  CHECK(s["seed"] == 12345);
  CHECK(s["family_size"] == 5);
}

TEST_CASE("determinism: byte-identical artifacts") {
  const std::string solve = R"j({"N": 96, "f": "exp(x)", "p": "1 + x/2", "mesh": "graded")j";
  const fs::path a = scratch("det_a"), b = scratch("det_b"), s = scratch("det_serial");
  CHECK(run(config(solve + "}", a)) == 0);
  CHECK(run(config(solve + "}", b)) == 0);
  CHECK(run(config(solve + R"j(, "exec": "serial"})j", s)) == 0);
  CHECK(slurp(a / "solution.csv") == slurp(b / "solution.csv"));
  CHECK(slurp(a / "solution.csv") == slurp(s / "solution.csv"));
  CHECK(slurp(a / "certificate.json") == slurp(b / "certificate.json"));

  const std::string scan = R"j({"task": "scan", "N": 64, "family_size": 6, "seed": 99)j";
  CHECK(run(config(scan + "}", a)) == 0);
  CHECK(run(config(scan + R"j(, "exec": "serial"})j", b)) == 0);
  CHECK(slurp(a / "scan.csv") == slurp(b / "scan.csv"));
  // A different seed changes the family.
  CHECK(run(config(R"j({"task": "scan", "N": 64, "family_size": 6, "seed": 100})j", s)) == 0);
  CHECK(slurp(a / "scan.csv") != slurp(s / "scan.csv"));
}

TEST_CASE("error records") {
  const json parse = json::parse(error_record(ParseError("syntax error at offset 2: x", 2, {"number"})));
  CHECK(parse["error"]["kind"] == "parse");
  CHECK(parse["error"]["offset"] == 2);
  CHECK(parse["error"]["expected"] == json::array({"number"}));
  const json dom = json::parse(error_record(DomainError("bad")));
  CHECK(dom["error"]["kind"] == "domain");
  CHECK(dom["error"]["message"] == "bad");
  CHECK_FALSE(dom["error"].contains("offset"));
  CHECK(json::parse(error_record(std::runtime_error("x")))["error"]["kind"] == "internal");
}

TEST_CASE("command-line binary") {
  const fs::path dir = scratch("binary");
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  };
  const Process ok = tool("--config " + write("ok.json", R"j({"N": 32})j") + " --out " + (dir / "o").string(), dir);
  CHECK(ok.status == 0);
  CHECK(fs::exists(dir / "o" / "solution.csv"));

  const Process over = tool("--config " + write("ok2.json", R"j({"N": 32})j") + " --task scan --seed 5 --out " +
                                (dir / "s").string(),
                            dir);
  CHECK(over.status == 0);
  CHECK(json::parse(slurp(dir / "s" / "scan.json"))["seed"] == 5);

  const Process bad = tool("--config " + write("bad.json", R"j({"alpha": 1.5})j"), dir);
  CHECK(bad.status == 2);
  CHECK(json::parse(bad.stdout_text)["error"]["kind"] == "config");

  const Process ell = tool("--config " + write("ell.json", R"j({"p": "x-1"})j"), dir);
  CHECK(ell.status == 2);
  CHECK(json::parse(ell.stdout_text)["error"]["kind"] == "ellipticity");

  const Process syn = tool("--config " + write("syn.json", R"j({"f": "2*^x"})j"), dir);
  CHECK(syn.status == 2);
  const json rec = json::parse(syn.stdout_text);
  CHECK(rec["error"]["kind"] == "parse");
  CHECK(rec["error"]["offset"] == 2);

  const Process fail = tool("--config " + write("fail.json", R"j({"task": "convergence", "z_star": "x*(1-x)",
      "N_list": [16, 32], "min_l2_rate": 3})j") + " --out " + (dir / "f").string(), dir);
  CHECK(fail.status == 1);

  CHECK(tool("--config /nonexistent.json", dir).status != 0);
  CHECK(tool("", dir).status != 0);
}
