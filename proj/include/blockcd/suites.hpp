#pragma once

#include "blockcd/theory_check.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bcd {

struct SuiteOptions {
  std::size_t jobs = 0;
  std::optional<std::uint64_t> seed;  // shifts every preset seed
  std::string out_dir;                // empty: write nothing
};

struct SuiteResult {
  int criterion = 0;
  std::string name;
  bool pass = false;
  int exit_code = 0;  // 0 pass, 1 Monte Carlo failure, 2 hard failure, 3 error
  std::string summary;
  double seconds = 0.0;
  std::vector<BoundReport> reports;
};

// Built-in presets, one per acceptance criterion, in criterion order.
const std::vector<std::string>& suite_names();
SuiteResult run_suite(const std::string& name, const SuiteOptions& opts = {});

}  // namespace bcd
