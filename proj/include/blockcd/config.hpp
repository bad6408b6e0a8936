#pragma once

#include "blockcd/algorithms.hpp"
#include "blockcd/error.hpp"
#include "blockcd/problems.hpp"
#include "blockcd/smoothness.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bcd {

struct ConfigIssue {
  int line = 0;  // 0 for cross-field problems with no single line
  std::string message;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

enum class Family { quadratic, sigmoid, streaming };
enum class AlgoName { pccd, vrccd, vroccd, sccd, prox_gd, page, sgd };
enum class LambdaMode { exact_quadratic, backtracking, explicit_values };

struct ProblemSpec {
  Family family = Family::quadratic;
  std::uint64_t n = 32;
  Index d = 16;
  Index m = 4;
  std::vector<Index> blocks;  // explicit sizes, overrides m when given
  double condition_number = 10.0;
  bool convex = true;
  Regularizer reg = Regularizer::zero();
  double margin = 2.0;
  double noise = 1.0;
  std::string instance_path;
  std::optional<std::uint64_t> seed;  // defaults to seeds.base
  double x0_scale = 0.0;              // 0: start at the origin
};

struct AlgorithmSpec {
  AlgoName name = AlgoName::pccd;
  std::size_t K = 100;
  std::optional<double> eta;  // nullopt = auto
  double eta_scale = 1.0;
  bool eta_override = false;
  StepMode step_rule = StepMode::theorem3;
  std::optional<double> mu;
  double p = 1.0;
  std::uint64_t b = 1;
  std::uint64_t bprime = 1;
  SampleSharing sharing = SampleSharing::fresh_per_block;
  bool finite_sum_schedule = false;
};

struct LambdaSpec {
  LambdaMode mode = LambdaMode::exact_quadratic;
  std::vector<double> values;
  double growth = 2.0;
  double init = 1.0;
  bool reset = false;
};

struct SmoothnessSpec {
  std::optional<double> L_hat;
  std::optional<double> L_tilde;
  QKind q_kind = QKind::component_average;
};

struct ExperimentConfig {
  ProblemSpec problem;
  AlgorithmSpec algorithm;
  LambdaSpec lambda;
  SmoothnessSpec smoothness;
  std::uint64_t seed_base = 0;
  std::size_t seed_count = 1;
  bool record_u = false;
  std::vector<std::string> checks;
  std::optional<double> sigma_sq;
  std::string trace_path = "trace_seed{seed}.csv";
  std::string report_path = "report.txt";
  bool record_wall_time = false;

  // raw key/value pairs after overrides, for re-parsing in sweeps
  std::map<std::string, std::string> source;

  bool stochastic() const;
  bool cyclic() const;
};

// Flat "section.key = value" lines with '#' comments. All problems are
// collected and thrown together as a ConfigError.
ExperimentConfig parse_config(std::string_view text,
                              const std::map<std::string, std::string>& overrides = {});
ExperimentConfig parse_config_file(const std::string& path,
                                   const std::map<std::string, std::string>& overrides = {});

bool is_numeric_key(const std::string& key);
const std::vector<std::string>& known_checks();

std::string to_string(AlgoName a);
std::string to_string(Family f);

}  // namespace bcd
