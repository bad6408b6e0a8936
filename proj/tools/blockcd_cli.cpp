#include "blockcd/config.hpp"
#include "blockcd/error.hpp"
#include "blockcd/experiment.hpp"
#include "blockcd/suites.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 0;
  std::string out_dir = ".";
  std::vector<std::string> sets;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "base seed (replaces seeds.base)");
  sub->add_option("--jobs", c.jobs, "worker threads, 0 = logical cores")->check(CLI::NonNegativeNumber);
  sub->add_option("--out-dir", c.out_dir, "directory for traces and reports");
}

std::map<std::string, std::string> parse_sets(const std::vector<std::string>& sets) {
  std::map<std::string, std::string> out;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw bcd::Error("--set expects key=value, got '" + s + "'");
    out[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return out;
}

std::vector<std::string> split_values(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_run(const std::string& path, const Common& c) {
  auto cfg = bcd::parse_config_file(path, parse_sets(c.sets));
  bcd::RunOptions ro;
  ro.out_dir = c.out_dir;
  ro.jobs = c.jobs;
  ro.seed = c.seed;
  const auto out = bcd::run_experiment(cfg, ro);
  bcd::write_report_text(std::cout, out.reports);
  if (out.escalated) std::cout << "Monte Carlo failure: reran at 4x seeds\n";
  for (const auto& f : out.files) std::cout << "wrote " << f << '\n';
  return out.exit_code;
}

int cmd_check(const std::string& suite, const Common& c) {
  std::vector<std::string> names;
  if (suite == "all") names = bcd::suite_names();
  else names.push_back(suite);
  bcd::SuiteOptions so;
  so.jobs = c.jobs;
  so.seed = c.seed;
  so.out_dir = c.out_dir;
  int code = 0;
  for (const auto& n : names) {
    const auto r = bcd::run_suite(n, so);
    std::printf("criterion %d %s: %s (%.1f s) %s\n", r.criterion, r.name.c_str(), r.pass ? "PASS" : "FAIL",
                r.seconds, r.summary.c_str());
    std::fflush(stdout);
    code = std::max(code, r.exit_code);
  }
  return code;
}

int cmd_sweep(const std::string& path, const std::string& axis, const std::string& values, const Common& c) {
  auto cfg = bcd::parse_config_file(path, parse_sets(c.sets));
  bcd::RunOptions ro;
  ro.jobs = c.jobs;
  ro.seed = c.seed;
  const auto rows = bcd::sweep(cfg, axis, split_values(values), ro);
  std::filesystem::create_directories(c.out_dir);
  const auto file = std::filesystem::path(c.out_dir) / ("sweep_" + axis + ".csv");
  std::ofstream os(file);
  bcd::write_sweep_csv(os, axis, rows);
  if (!os) throw bcd::Error("cannot write '" + file.string() + "'");
  std::cout << "wrote " << rows.size() << " rows to " << file.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cyclic block coordinate descent experiments"};
  app.require_subcommand(1);
  Common common;

  std::string run_path;
  auto* run = app.add_subcommand("run", "run a config file");
  run->add_option("config", run_path)->required()->check(CLI::ExistingFile);
  run->add_option("--set", common.sets, "override a config key: key=value");
  add_common(run, common);

  std::string suite;
  auto* check = app.add_subcommand("check", "run a built-in acceptance preset");
  std::string names = "all";
  for (const auto& n : bcd::suite_names()) names += "|" + n;
  check->add_option("suite", suite, names)->required();
  add_common(check, common);

  std::string sweep_path, axis, values;
  auto* sw = app.add_subcommand("sweep", "rerun a config over values of one numeric key");
  sw->add_option("config", sweep_path)->required()->check(CLI::ExistingFile);
  sw->add_option("--axis", axis, "numeric config key")->required();
  sw->add_option("--values", values, "comma-separated values")->required();
  sw->add_option("--set", common.sets, "override a config key: key=value");
  add_common(sw, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bcd::exit_error;
  }

  try {
    if (*run) return cmd_run(run_path, common);
    if (*check) return cmd_check(suite, common);
    return cmd_sweep(sweep_path, axis, values, common);
  } catch (const bcd::ConfigError& e) {
    std::cerr << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return bcd::exit_error;
}
