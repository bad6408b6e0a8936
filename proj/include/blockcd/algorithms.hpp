#pragma once

#include "blockcd/block_core.hpp"
#include "blockcd/objective.hpp"
#include "blockcd/regularizer.hpp"
#include "blockcd/smoothness.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace bcd {

inline constexpr double kNotRecorded = std::numeric_limits<double>::quiet_NaN();

struct TraceRow {
  std::size_t k = 0;
  double F = 0.0;
  double s = kNotRecorded;  // s_k; absent at k = 0
  double v = 0.0;           // ||x_k - x_{k-1}||^2_Lambda
  double u = kNotRecorded;  // sum_j ||g_{k-1}^j - grad_j f(x_{k-1,j})||^2_{Lambda_j^{-1}}
  // sum_j ||grad_j f(x_{k-1,j}) + r'_j(x_k^j)||^2_{Lambda_j^{-1}}, recorded with u
  double w = kNotRecorded;
  std::uint64_t grad_component_evals = 0;  // cumulative sampled components
  double work = 0.0;                       // cumulative sum of batch * block dimension
  std::int64_t wall_ns = -1;               // -1 when timing is off
};

struct RunTrace {
  std::vector<TraceRow> rows;      // rows[k] for k = 0..K
  std::vector<Vector> iterates;    // x_0..x_K when requested
  std::size_t output_index = 0;    // k of the returned point
  bool stationarity_approximate = false;
};

struct RunResult {
  Vector x;
  RunTrace trace;
  DiagonalMetric metric;  // the metric in force at the end (backtracking may grow it)
};

struct Diagnostics {
  bool record_u = false;  // also records w; needs exact block gradients
  bool record_iterates = false;
  bool record_wall_time = false;
  // called with each row as soon as it is complete
  std::function<void(const TraceRow&)> on_row;
};

struct PccdConfig {
  std::size_t K = 1;
  std::optional<DiagonalMetric> metric;  // required unless backtracking
  bool backtracking = false;
  BacktrackOptions backtrack;
  bool backtrack_reset = false;  // restart every block estimate at init each cycle
  Vector x0;
  double eta = 1.0;  // 1 is the unit-step algorithm; other values for comparisons
  Diagnostics diagnostics;
};

enum class SampleSharing { fresh_per_block, shared_per_cycle };

struct VrccdConfig {
  std::size_t K = 1;
  double eta = 1.0;
  double p = 1.0;
  std::uint64_t b = 1;
  std::uint64_t bprime = 1;
  std::optional<DiagonalMetric> metric;
  Vector x0;
  SampleSharing sharing = SampleSharing::fresh_per_block;
  std::uint64_t seed = 0;
  // When set, eta above the bound (or p = 0) is only accepted with override.
  std::optional<double> eta_bound;
  bool eta_override = false;
  Diagnostics diagnostics;
};

RunResult pccd_run(const Objective& prob, const Regularizer& reg, const PccdConfig& cfg);
RunResult vrccd_run(const Objective& prob, const Regularizer& reg, const VrccdConfig& cfg);

// Full-vector counterparts: one simultaneous update of all coordinates.
RunResult baseline_prox_gd(const Objective& prob, const Regularizer& reg, const PccdConfig& cfg);
RunResult baseline_page(const Objective& prob, const Regularizer& reg, const VrccdConfig& cfg);
// PAGE with p = 1.
RunResult baseline_sgd(const Objective& prob, const Regularizer& reg, VrccdConfig cfg);

// sum_j ||grad_j f(x) + residual_j||^2_{Lambda_j^{-1}}, the residual being the
// prox-induced subgradient of the last cycle.
double stationarity_sq(const Objective& prob, const DiagonalMetric& metric, const Vector& x,
                       const Vector& residual);

}  // namespace bcd
