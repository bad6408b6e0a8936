#pragma once

#include "blockcd/algorithms.hpp"
#include "blockcd/config.hpp"
#include "blockcd/theory_check.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bcd {

// Everything derived from a config before any algorithm runs.
struct ProblemSetup {
  std::unique_ptr<Objective> objective;
  Regularizer reg = Regularizer::zero();
  std::optional<DiagonalMetric> metric;  // empty when backtracking
  std::optional<LConstants> L;
  bool L_supplied = false;
  std::optional<double> mu;
  Vector x0;
  std::uint64_t problem_seed = 0;

  const QuadraticFiniteSum* quadratic() const;
  const StreamingQuadratic* streaming() const;
};

ProblemSetup build_problem(const ExperimentConfig& cfg);

// Step size actually used; bound is the admissible maximum when known.
struct ResolvedStep {
  double eta = 1.0;
  std::optional<double> bound;
};
ResolvedStep resolve_step(const ExperimentConfig& cfg, const ProblemSetup& setup);

RunResult run_one(const ExperimentConfig& cfg, const ProblemSetup& setup, std::uint64_t seed,
                  bool record_iterates = false,
                  std::function<void(const TraceRow&)> on_row = {});

struct RunOptions {
  std::string out_dir = ".";
  std::size_t jobs = 0;  // 0: hardware concurrency
  std::optional<std::uint64_t> seed;  // replaces seeds.base
  bool write_files = true;
};

enum ExitCode : int { exit_ok = 0, exit_soft_fail = 1, exit_hard_fail = 2, exit_error = 3 };

struct ExperimentOutcome {
  int exit_code = exit_ok;
  std::vector<BoundReport> reports;
  std::vector<RunTrace> traces;  // one per seed of the final (possibly escalated) batch
  std::vector<std::string> files;
  bool escalated = false;
};

ExperimentOutcome run_experiment(ExperimentConfig cfg, const RunOptions& opts = {});

// Resolved parameters, echoed as "# key = value" lines at the top of every CSV.
std::vector<std::pair<std::string, std::string>> resolved_parameters(const ExperimentConfig& cfg,
                                                                      const ProblemSetup& setup,
                                                                      std::uint64_t seed);

void write_trace_csv(std::ostream& os, const RunTrace& trace,
                     const std::vector<std::pair<std::string, std::string>>& header);
// Pieces of write_trace_csv, for writing rows as they are produced.
void write_trace_header(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& header);
void write_trace_row(std::ostream& os, const TraceRow& r);

struct SweepRow {
  std::string value;
  std::uint64_t seed = 0;
  double final_F = 0.0;
  double final_s = 0.0;
  double total_work = 0.0;
};

// Reruns cfg once per value of a numeric key, one row per value and seed.
std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::string& axis,
                            const std::vector<std::string>& values, const RunOptions& opts = {});
void write_sweep_csv(std::ostream& os, const std::string& axis, const std::vector<SweepRow>& rows);

// Runs fn(0..count-1) on up to jobs threads; the first exception is rethrown.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace bcd
