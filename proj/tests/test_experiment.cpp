#include "blockcd/experiment.hpp"
#include "blockcd/suites.hpp"

#include <doctest.h>

#include <bit>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace bcd;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  static std::mt19937_64 g(std::random_device{}());
  const fs::path p = fs::temp_directory_path() / ("blockcd_" + tag + "_" + std::to_string(g()));
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

const char* kConvex =
    "problem.family = quadratic\n"
    "problem.n = 12\n"
    "problem.d = 10\n"
    "problem.m = 3\n"
    "problem.condition_number = 8\n"
    "problem.reg = l1(0.05)\n"
    "problem.x0_scale = 1\n"
    "algorithm.name = pccd\n"
    "algorithm.K = 40\n"
    "smoothness.q_kind = mean_function\n"
    "diagnostics.checks = descent, lemma2, lemma3, theorem1\n"
    "seeds.base = 3\n";

const char* kStochastic =
    "problem.n = 16\n"
    "problem.d = 8\n"
    "problem.m = 4\n"
    "algorithm.name = vrccd\n"
    "algorithm.K = 30\n"
    "algorithm.p = 0.5\n"
    "algorithm.b = 8\n"
    "algorithm.bprime = 2\n"
    "seeds.count = 2\n";

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + BLOCKCD_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("reruns produce byte-identical traces") {
  const auto a = fresh_dir("a"), b = fresh_dir("b");
  RunOptions o;
  o.jobs = 1;
  o.out_dir = a.string();
  run_experiment(parse_config(kStochastic), o);
  o.out_dir = b.string();
  o.jobs = 2;
  run_experiment(parse_config(kStochastic), o);
  for (const char* f : {"trace_seed0.csv", "trace_seed1.csv"}) {
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(slurp(a / "trace_seed0.csv") != slurp(a / "trace_seed1.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("trace schema") {
  const auto dir = fresh_dir("schema");
  RunOptions o;
  o.out_dir = dir.string();
  auto cfg = parse_config(std::string(kStochastic) + "output.trace_path = t.csv\n", {{"seeds.count", "1"}});
  const auto out = run_experiment(cfg, o);
  const auto lines = lines_of(slurp(dir / "t.csv"));
  std::size_t h = 0;
  while (h < lines.size() && lines[h].rfind("# ", 0) == 0) ++h;
  CHECK(h > 5);
  bool saw_eta = false;
  for (std::size_t i = 0; i < h; ++i) saw_eta = saw_eta || lines[i].rfind("# algorithm.eta = ", 0) == 0;
  CHECK(saw_eta);
  REQUIRE(lines.size() == h + 1 + 31);
  CHECK(lines[h] == "k,F,s_k,v_k,u_k,grad_component_evals,wall_ns");
  // k = 0: no s, no v, no u, no wall time
  CHECK(lines[h + 1].rfind("0,", 0) == 0);
  CHECK(lines[h + 1].find(",,,,") != std::string::npos);
  // row k = 30 has 7 fields and the cumulative evaluation count
  const auto last = lines.back();
  CHECK(std::count(last.begin(), last.end(), ',') == 6);
  CHECK(last.rfind("30,", 0) == 0);
  CHECK(out.traces.size() == 1);
  fs::remove_all(dir);
}

TEST_CASE("convex preset passes its deterministic checks") {
  const auto dir = fresh_dir("thm1");
  RunOptions o;
  o.out_dir = dir.string();
  const auto out = run_experiment(parse_config(kConvex), o);
  CHECK(out.exit_code == exit_ok);
  REQUIRE(out.reports.size() == 4);
  for (const auto& r : out.reports) CHECK(r.pass);
  const auto txt = slurp(dir / "report.txt");
  CHECK(txt.find("theorem1: PASS") != std::string::npos);
  CHECK(txt.find("exit_status = 0") != std::string::npos);
  CHECK(slurp(dir / "report.csv").rfind("bound_name,k,lhs,rhs,slack,verdict\n", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("a metric that is too small is a hard failure") {
  RunOptions o;
  o.write_files = false;
  const auto out = run_experiment(parse_config(kConvex, {{"lambda.mode", "explicit"},
                                                         {"lambda.values", "0.1"},
                                                         {"algorithm.K", "5"},
                                                         {"diagnostics.checks", "descent"}}),
                                  o);
  CHECK(out.exit_code == exit_hard_fail);
  REQUIRE(out.reports.size() == 1);
  CHECK_FALSE(out.reports[0].pass);
}

TEST_CASE("supplied constants mark reports conditional") {
  RunOptions o;
  o.write_files = false;
  const auto out = run_experiment(
      parse_config(kConvex, {{"smoothness.L_hat", "50"}, {"smoothness.L_tilde", "0"}, {"diagnostics.checks", "lemma2"}}), o);
  REQUIRE(out.reports.size() == 1);
  CHECK(out.reports[0].conditional());
}

TEST_CASE("step above the bound skips rate checks") {
  RunOptions o;
  o.write_files = false;
  const auto cfg = parse_config(std::string(kStochastic) +
                                "algorithm.eta = 5\nalgorithm.eta_override = true\n"
                                "diagnostics.record_u = true\ndiagnostics.checks = lemma5, theorem3, potential\n");
  const auto setup = build_problem(cfg);
  const auto step = resolve_step(cfg, setup);
  REQUIRE(step.bound);
  REQUIRE(*step.bound < 5.0);
  const auto out = run_experiment(cfg, o);
  REQUIRE(out.reports.size() == 3);
  CHECK(out.reports[0].rows.size() > 0);  // the one-step inequality holds for any eta
  for (std::size_t i = 1; i < 3; ++i) {
    CHECK(out.reports[i].rows.empty());
    CHECK(out.reports[i].flags.front().rfind("skipped", 0) == 0);
  }
  std::ostringstream os;
  write_report_text(os, out.reports);
  CHECK(os.str().find("theorem3: SKIPPED") != std::string::npos);
}

TEST_CASE("auto step is the bound") {
  const auto cfg = parse_config(std::string(kStochastic) + "algorithm.eta_scale = 0.5\n");
  const auto setup = build_problem(cfg);
  const auto step = resolve_step(cfg, setup);
  REQUIRE(step.bound);
  CHECK(step.eta == 0.5 * *step.bound);
  CHECK(*step.bound == step_size(*setup.L, 0.5, 8, 2, 16, StepMode::theorem3).eta);
}

TEST_CASE("sweep rows and the single-block row") {
  auto cfg = parse_config("problem.n = 10\nproblem.d = 6\nproblem.m = 3\nalgorithm.name = pccd\nalgorithm.K = 15\n"
                          "problem.x0_scale = 1\nseeds.count = 2\n");
  RunOptions o;
  o.write_files = false;
  const auto rows = sweep(cfg, "problem.m", {"1", "2", "6"}, o);
  CHECK(rows.size() == 6);
  CHECK(rows[0].value == "1");
  CHECK(rows[5].value == "6");

  auto gd = parse_config("problem.n = 10\nproblem.d = 6\nproblem.m = 3\nalgorithm.name = prox_gd\nalgorithm.K = 15\n"
                         "problem.x0_scale = 1\n");
  const auto setup = build_problem(gd);
  const auto res = run_one(gd, setup, 0);
  CHECK(std::bit_cast<std::uint64_t>(rows[0].final_F) == std::bit_cast<std::uint64_t>(res.trace.rows.back().F));
  // deterministic algorithm: both seeds agree
  CHECK(rows[0].final_F == rows[1].final_F);

  CHECK_THROWS_AS(sweep(cfg, "algorithm.name", {"pccd"}, o), Error);
  CHECK_THROWS_AS(sweep(cfg, "problem.m", {}, o), Error);
  CHECK_THROWS_AS(sweep(cfg, "problem.m", {"9"}, o), ConfigError);
  std::ostringstream os;
  write_sweep_csv(os, "problem.m", rows);
  CHECK(lines_of(os.str()).size() == 7);
  CHECK(lines_of(os.str())[0] == "axis,value,seed,final_F,final_s,total_work");
}

TEST_CASE("parallel_for covers every index and forwards errors") {
  std::vector<int> hit(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hit[i] += 1; });
  CHECK(std::count(hit.begin(), hit.end(), 1) == 100);
  CHECK_THROWS(parallel_for(10, 3, [](std::size_t i) {
    if (i == 7) throw Error("boom");
  }));
}

TEST_CASE("suite names and an unknown suite") {
  CHECK(suite_names().size() == 10);
  CHECK_THROWS_AS(run_suite("no_such_suite"), Error);
}

TEST_CASE("command line") {
  const auto dir = fresh_dir("cli");
  {
    std::ofstream os(dir / "exp.cfg");
    os << kConvex;
  }
  const auto log = dir / "log.txt";
  CHECK(run_cli("run \"" + (dir / "exp.cfg").string() + "\" --out-dir \"" + (dir / "out").string() + "\"", log) == 0);
  CHECK(fs::exists(dir / "out" / "trace_seed3.csv"));
  CHECK(slurp(log).find("theorem1: PASS") != std::string::npos);

  CHECK(run_cli("run \"" + (dir / "exp.cfg").string() + "\" --seed 11 --out-dir \"" + (dir / "o2").string() + "\"", log) == 0);
  CHECK(fs::exists(dir / "o2" / "trace_seed11.csv"));

  CHECK(run_cli("sweep \"" + (dir / "exp.cfg").string() + "\" --axis algorithm.K --values 5,10 --out-dir \"" +
                    (dir / "sw").string() + "\"",
                log) == 0);
  CHECK(lines_of(slurp(dir / "sw" / "sweep_algorithm.K.csv")).size() == 3);

  CHECK(run_cli("check gradient_prox --jobs 1", log) == 0);
  CHECK(slurp(log).find("criterion 10 gradient_prox: PASS") != std::string::npos);

  {
    std::ofstream os(dir / "bad.cfg");
    os << "algorithm.name = vrccd\nalgorithm.p = 1.5\n";
  }
  CHECK(run_cli("run \"" + (dir / "bad.cfg").string() + "\"", log) == 3);
  CHECK(slurp(log).find("(0,1]") != std::string::npos);
  CHECK(run_cli("sweep \"" + (dir / "exp.cfg").string() + "\" --axis problem.reg --values 1", log) == 3);
  CHECK(run_cli("frobnicate", log) == 3);
  fs::remove_all(dir);
}

}
