#pragma once

#include "blockcd/algorithms.hpp"
#include "blockcd/problems.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace bcd {

// One-sided 99% normal quantile.
inline constexpr double kZ99 = 2.3263478740408408;

enum class CheckKind { deterministic, expectation };

struct BoundRow {
  std::size_t k = 0;
  double lhs = 0.0;
  double rhs = 0.0;  // includes the confidence allowance for expectation checks
  double slack = 0.0;
  bool pass = true;
};

struct BoundReport {
  BoundReport() = default;
  explicit BoundReport(std::string n, CheckKind k = CheckKind::deterministic)
      : name(std::move(n)), kind(k) {}

  std::string name;
  CheckKind kind = CheckKind::deterministic;
  std::vector<BoundRow> rows;
  std::vector<std::string> flags;  // e.g. "conditional: ...", "low-power"
  std::size_t seeds = 1;
  bool pass = true;

  bool conditional() const;
  std::size_t violations() const;
  double worst_slack() const;
  void add(std::size_t k, double lhs, double rhs);  // deterministic tolerance
  void add_with_ci(std::size_t k, double lhs, double rhs, double allowance);
};

double abs_tol(double rhs);

// F* and where it came from. With a Hessian and minimizer the gap is
// evaluated as 1/2 e'He, which avoids cancellation near the optimum.
struct Reference {
  double F_star = 0.0;
  std::optional<Vector> x_star;
  std::optional<Matrix> hessian;
  std::string provenance;
  bool certified = false;

  double gap(const Objective& prob, const Regularizer& reg, const Vector& x) const;
};

// Closed form for r = 0 and a positive definite mean Hessian.
Reference reference_exact_quadratic(const QuadraticFiniteSum& prob);

// Long proximal gradient run (full vector, backtracked L I) to a min-norm
// stationarity of tol. With mu > 0 (strongly convex F in the metric) the
// result is a certified lower bound F(x) - dist^2/(2 mu); otherwise it is the
// best value found and not certified.
Reference reference_solve(const Objective& prob, const Regularizer& reg,
                          const DiagonalMetric& metric, std::optional<double> mu, const Vector& x0,
                          double tol = 1e-12, std::size_t max_iter = 1000000);

// Gaps F(x_k) - F* for k = 0..K, using the iterates when recorded.
std::vector<double> optimality_gaps(const RunTrace& trace, const Objective& prob,
                                    const Regularizer& reg, const Reference& ref);

struct VrParams {
  double eta = 1.0;
  double p = 1.0;
  std::uint64_t b = 1;
  std::uint64_t bprime = 1;
  std::optional<std::uint64_t> n;
  SampleSharing sharing = SampleSharing::fresh_per_block;
};

// Pathwise checks on a single trace.
BoundReport check_descent(const RunTrace& trace);
BoundReport check_lemma2(const RunTrace& trace, double L_hat);
BoundReport check_lemma3(const RunTrace& trace, const Reference& ref);
BoundReport check_theorem1(const RunTrace& trace, double L_hat, double delta0,
                           bool delta0_certified = true);
BoundReport check_corollary1_pl(const std::vector<double>& gaps, double L_hat, double mu);
BoundReport check_lemma5(const RunTrace& trace, double eta);
BoundReport check_lemma6(const RunTrace& trace, double L_hat);
BoundReport check_potential_pathwise(const RunTrace& trace, const VrParams& params, double L_hat,
                                     double sigma_sq);

// Expectation checks over seeded runs of one configuration.
BoundReport check_potential_descent(const std::vector<RunTrace>& traces, const VrParams& params,
                                    double L_hat, double sigma_sq);
// s at the drawn output point, one value per seed.
BoundReport check_theorem3_rate(const std::vector<double>& s_hat, const VrParams& params,
                                std::size_t K, double sigma_sq, double delta0);
BoundReport check_corollary4_pl_rate(const std::vector<double>& final_gaps, const VrParams& params,
                                     std::size_t K, double mu, double sigma_sq, double delta0);

BoundReport check_arith_cost(const RunTrace& trace, const VrParams& params, Index d, Index m);

// s value of the trace's output point.
double output_stationarity(const RunTrace& trace);

struct MeanCi {
  double mean = 0.0;
  double sd = 0.0;
  double allowance = 0.0;  // z * sd / sqrt(S)
};
MeanCi mean_ci(const std::vector<double>& values, double z = kZ99);

void write_report_text(std::ostream& os, const std::vector<BoundReport>& reports);
void write_report_csv(std::ostream& os, const std::vector<BoundReport>& reports);

}  // namespace bcd
