// One line per acceptance criterion; exit status is nonzero if any fails.
#include "blockcd/suites.hpp"

#include <CLI11.hpp>

#include <cstdio>

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  std::size_t jobs = 0;
  app.add_option("--criterion", only, "run only these criteria (1-10)");
  app.add_option("--jobs", jobs, "worker threads");
  CLI11_PARSE(app, argc, argv);

  const auto& names = bcd::suite_names();
  int failed = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const int c = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), c) == only.end()) continue;
    bcd::SuiteOptions opts;
    opts.jobs = jobs;
    const auto r = bcd::run_suite(names[i], opts);
    std::printf("criterion %2d %-16s %s  %.1fs  %s\n", c, names[i].c_str(), r.pass ? "PASS" : "FAIL", r.seconds,
                r.summary.c_str());
    std::fflush(stdout);
    failed += !r.pass;
  }
  return failed == 0 ? 0 : 1;
}
