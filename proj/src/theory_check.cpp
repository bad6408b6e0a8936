#include "blockcd/theory_check.hpp"

#include "blockcd/error.hpp"
#include "blockcd/smoothness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace bcd {

double abs_tol(double rhs) { return 1e-9 * std::max(1.0, std::abs(rhs)); }

bool BoundReport::conditional() const {
  return std::any_of(flags.begin(), flags.end(),
                     [](const std::string& f) { return f.rfind("conditional", 0) == 0; });
}

std::size_t BoundReport::violations() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const BoundRow& r) { return !r.pass; }));
}

double BoundReport::worst_slack() const {
  double w = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) w = std::min(w, r.slack);
  return w;
}

void BoundReport::add(std::size_t k, double lhs, double rhs) {
  BoundRow row{k, lhs, rhs, rhs - lhs, false};
  row.pass = !std::isnan(row.slack) && row.slack >= -abs_tol(rhs);
  pass = pass && row.pass;
  rows.push_back(row);
}

void BoundReport::add_with_ci(std::size_t k, double lhs, double rhs, double allowance) {
  add(k, lhs, rhs + allowance);
}

MeanCi mean_ci(const std::vector<double>& values, double z) {
  MeanCi out;
  if (values.empty()) return out;
  const double S = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / S;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / (S - 1.0));
  }
  out.allowance = z * out.sd / std::sqrt(S);
  return out;
}

// ---------------------------------------------------------------- references

double Reference::gap(const Objective& prob, const Regularizer& reg, const Vector& x) const {
  if (hessian && x_star && reg.kind() == Regularizer::Kind::zero) {
    const Vector e = x - *x_star;
    return 0.5 * e.dot(*hessian * e);
  }
  return composite_value(prob, reg, x) - F_star;
}

Reference reference_exact_quadratic(const QuadraticFiniteSum& prob) {
  auto xs = prob.minimizer();
  if (!xs) throw std::invalid_argument("closed-form reference needs a positive definite Hessian");
  Reference ref;
  ref.x_star = *xs;
  ref.hessian = prob.mean_A();
  ref.F_star = prob.value(*xs);
  ref.provenance = "closed form";
  ref.certified = true;
  return ref;
}

Reference reference_solve(const Objective& prob, const Regularizer& reg,
                          const DiagonalMetric& metric, std::optional<double> mu, const Vector& x0,
                          double tol, std::size_t max_iter) {
  const Index d = prob.dim();
  Vector x = x0;
  double L = 1.0;
  double dist_euclid = std::numeric_limits<double>::infinity();
  Vector g = prob.full_grad(x);
  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    const double f = prob.value(x);
    Vector xn;
    for (int t = 0;; ++t) {
      if (t > 200) throw Error("reference solve: backtracking diverged");
      xn = reg.metric_prox(x, g, 1.0, Vector::Constant(d, L));
      const Vector step = xn - x;
      if (block_descent_holds(prob.value(xn), f, g.dot(step), L, step.squaredNorm())) break;
      L *= 2.0;
    }
    x = std::move(xn);
    g = prob.full_grad(x);
    dist_euclid = (g + reg.min_norm_subgradient(x, g)).norm();
    if (dist_euclid <= tol) break;
  }
  Reference ref;
  const double Fx = composite_value(prob, reg, x);
  const double dist_sq = metric_norm_sq(g + reg.min_norm_subgradient(x, g), metric, true);
  ref.x_star = x;
  if (mu && *mu > 0.0) {
    ref.F_star = Fx - dist_sq / (2.0 * *mu);
    ref.certified = true;
    ref.provenance = "certified lower bound (strong convexity, residual " + std::to_string(dist_euclid) + ")";
  } else {
    ref.F_star = Fx;
    ref.provenance = "best known value (not certified)";
  }
  if (dist_euclid > tol) ref.provenance += "; tolerance not reached";
  return ref;
}

std::vector<double> optimality_gaps(const RunTrace& trace, const Objective& prob,
                                    const Regularizer& reg, const Reference& ref) {
  std::vector<double> gaps;
  const bool use_iterates = trace.iterates.size() == trace.rows.size();
  for (std::size_t k = 0; k < trace.rows.size(); ++k)
    gaps.push_back(use_iterates ? ref.gap(prob, reg, trace.iterates[k])
                                : trace.rows[k].F - ref.F_star);
  return gaps;
}

// ---------------------------------------------------------------- pathwise

namespace {

void need_rows(const RunTrace& t) {
  if (t.rows.size() < 2) throw std::invalid_argument("trace has no iterations");
}

void need_u(const RunTrace& t) {
  for (std::size_t k = 1; k < t.rows.size(); ++k)
    if (std::isnan(t.rows[k].u) || std::isnan(t.rows[k].w))
      throw std::invalid_argument("check needs u_k recording (diagnostics.record_u)");
}

}  // namespace

BoundReport check_descent(const RunTrace& trace) {
  need_rows(trace);
  BoundReport rep{"descent"};
  for (std::size_t k = 1; k < trace.rows.size(); ++k) {
    const auto& r = trace.rows[k];
    rep.add(k, r.F, trace.rows[k - 1].F - 0.5 * r.v);
  }
  return rep;
}

BoundReport check_lemma2(const RunTrace& trace, double L_hat) {
  need_rows(trace);
  BoundReport rep{"lemma2"};
  for (std::size_t k = 1; k < trace.rows.size(); ++k) {
    const auto& r = trace.rows[k];
    rep.add(k, r.s, 2.0 * (L_hat + 1.0) * r.v);
  }
  return rep;
}

BoundReport check_lemma3(const RunTrace& trace, const Reference& ref) {
  need_rows(trace);
  BoundReport rep{"lemma3"};
  if (!ref.certified) rep.flags.push_back("conditional: F* is " + ref.provenance);
  const double rhs = 2.0 * (trace.rows[0].F - ref.F_star);
  double acc = 0.0;
  for (std::size_t k = 1; k < trace.rows.size(); ++k) {
    acc += trace.rows[k].v;
    rep.add(k, acc, rhs);
  }
  return rep;
}

BoundReport check_theorem1(const RunTrace& trace, double L_hat, double delta0,
                           bool delta0_certified) {
  need_rows(trace);
  BoundReport rep{"theorem1"};
  if (!delta0_certified) rep.flags.push_back("conditional: delta0 not certified");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t K = 1; K < trace.rows.size(); ++K) {
    best = std::min(best, trace.rows[K].s);
    rep.add(K, best, 4.0 * (L_hat + 1.0) * delta0 / static_cast<double>(K));
  }
  return rep;
}

BoundReport check_corollary1_pl(const std::vector<double>& gaps, double L_hat, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("PL constant mu must be positive");
  if (gaps.size() < 2) throw std::invalid_argument("need gaps for k = 0..K");
  BoundReport rep{"corollary1"};
  const double rho = 2.0 * (L_hat + 1.0) / (2.0 * (L_hat + 1.0) + mu);
  for (std::size_t k = 1; k < gaps.size(); ++k)
    rep.add(k, gaps[k], std::pow(rho, static_cast<double>(k)) * gaps[0]);
  return rep;
}

BoundReport check_lemma5(const RunTrace& trace, double eta) {
  need_rows(trace);
  need_u(trace);
  BoundReport rep{"lemma5"};
  for (std::size_t k = 1; k < trace.rows.size(); ++k) {
    const auto& r = trace.rows[k];
    const double rhs = trace.rows[k - 1].F - (1.0 - eta) / (2.0 * eta) * r.v + 0.5 * eta * r.u -
                       0.5 * eta * r.w;
    rep.add(k, r.F, rhs);
  }
  return rep;
}

BoundReport check_lemma6(const RunTrace& trace, double L_hat) {
  need_rows(trace);
  need_u(trace);
  BoundReport rep{"lemma6"};
  for (std::size_t k = 1; k < trace.rows.size(); ++k) {
    const auto& r = trace.rows[k];
    rep.add(k, r.s, 2.0 * L_hat * r.v + 2.0 * r.w);
  }
  return rep;
}

namespace {

struct PotentialCoefficients {
  double cu = 0.0;
  double cv = 0.0;
  double noise = 0.0;
};

PotentialCoefficients potential_coefficients(const VrParams& pr, double L_hat, double sigma_sq) {
  if (!(pr.p > 0.0)) throw std::invalid_argument("potential needs p > 0");
  PotentialCoefficients c;
  c.cu = (1.0 - pr.p) * pr.eta / (2.0 * pr.p);
  c.cv = (1.0 - pr.p) * L_hat * pr.eta / (pr.p * static_cast<double>(pr.bprime));
  c.noise = variance_factor(pr.n, pr.b) * sigma_sq * pr.eta;
  return c;
}

double phi(const TraceRow& r, const PotentialCoefficients& c) {
  const double u = std::isnan(r.u) ? 0.0 : r.u;
  return r.F + c.cu * u + c.cv * r.v;
}

}  // namespace

BoundReport check_potential_pathwise(const RunTrace& trace, const VrParams& params, double L_hat,
                                     double sigma_sq) {
  need_rows(trace);
  need_u(trace);
  const auto c = potential_coefficients(params, L_hat, sigma_sq);
  BoundReport rep{"potential"};
  for (std::size_t k = 1; k < trace.rows.size(); ++k) {
    const auto& r = trace.rows[k];
    rep.add(k, 0.25 * params.eta * r.s + phi(r, c), phi(trace.rows[k - 1], c) + c.noise);
  }
  return rep;
}

BoundReport check_potential_descent(const std::vector<RunTrace>& traces, const VrParams& params,
                                    double L_hat, double sigma_sq) {
  if (traces.empty()) throw std::invalid_argument("no traces");
  const auto c = potential_coefficients(params, L_hat, sigma_sq);
  BoundReport rep{"potential", CheckKind::expectation};
  rep.seeds = traces.size();
  if (traces.size() < 30) rep.flags.push_back("low-power");
  const std::size_t K = traces.front().rows.size() - 1;
  for (const auto& t : traces) {
    need_u(t);
    if (t.rows.size() != K + 1) throw std::invalid_argument("traces differ in length");
  }
  for (std::size_t k = 1; k <= K; ++k) {
    std::vector<double> diff;
    for (const auto& t : traces)
      diff.push_back(0.25 * params.eta * t.rows[k].s + phi(t.rows[k], c) - phi(t.rows[k - 1], c));
    const auto ci = mean_ci(diff);
    rep.add_with_ci(k, ci.mean, c.noise, ci.allowance);
  }
  return rep;
}

BoundReport check_theorem3_rate(const std::vector<double>& s_hat, const VrParams& params,
                                std::size_t K, double sigma_sq, double delta0) {
  if (s_hat.empty() || K < 1) throw std::invalid_argument("need runs and K >= 1");
  BoundReport rep{"theorem3", CheckKind::expectation};
  rep.seeds = s_hat.size();
  if (s_hat.size() < 30) rep.flags.push_back("low-power");
  const double vf = variance_factor(params.n, params.b);
  const double Kd = static_cast<double>(K);
  const double rhs = 4.0 * delta0 / (params.eta * Kd) +
                     vf * sigma_sq * (2.0 * (1.0 - params.p) / (params.p * Kd) + 4.0);
  const auto ci = mean_ci(s_hat);
  rep.add_with_ci(K, ci.mean, rhs, ci.allowance);
  return rep;
}

BoundReport check_corollary4_pl_rate(const std::vector<double>& final_gaps,
                                     const VrParams& params, std::size_t K, double mu,
                                     double sigma_sq, double delta0) {
  if (!(mu > 0.0)) throw std::invalid_argument("PL constant mu must be positive");
  if (final_gaps.empty()) throw std::invalid_argument("no runs");
  BoundReport rep{"corollary4", CheckKind::expectation};
  rep.seeds = final_gaps.size();
  if (final_gaps.size() < 30) rep.flags.push_back("low-power");
  const double vf = variance_factor(params.n, params.b);
  const double contraction = std::pow(1.0 + params.eta * mu / 2.0, -static_cast<double>(K));
  const double rhs =
      contraction * (delta0 + sigma_sq * params.eta * (1.0 - params.p) * vf / params.p) +
      4.0 * vf * sigma_sq / mu;
  const auto ci = mean_ci(final_gaps);
  rep.add_with_ci(K, ci.mean, rhs, ci.allowance);
  return rep;
}

BoundReport check_arith_cost(const RunTrace& trace, const VrParams& params, Index d, Index m) {
  need_rows(trace);
  BoundReport rep{"arith_cost"};
  const std::size_t K = trace.rows.size() - 1;
  if (K < 10000) rep.flags.push_back("low-power");
  const double per_block = params.p * static_cast<double>(params.b) +
                           (1.0 - params.p) * static_cast<double>(params.bprime);
  const bool exact = params.p == 0.0 || params.p == 1.0;
  const double tol = exact ? 1e-12 : 0.02;
  const double Kd = static_cast<double>(K);

  const double work = (trace.rows.back().work - trace.rows.front().work) / Kd;
  const double expected_work = per_block * static_cast<double>(d);
  rep.add(0, std::abs(work - expected_work) / expected_work, tol);

  const double evals = static_cast<double>(trace.rows.back().grad_component_evals -
                                           trace.rows.front().grad_component_evals) / Kd;
  const double expected_evals =
      per_block * (params.sharing == SampleSharing::fresh_per_block ? static_cast<double>(m) : 1.0);
  rep.add(1, std::abs(evals - expected_evals) / expected_evals, tol);
  return rep;
}

double output_stationarity(const RunTrace& trace) {
  if (trace.output_index >= trace.rows.size()) throw std::out_of_range("output index outside trace");
  return trace.rows[trace.output_index].s;
}

// ---------------------------------------------------------------- reports

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_report_text(std::ostream& os, const std::vector<BoundReport>& reports) {
  for (const auto& r : reports) {
    const char* verdict = r.rows.empty() && r.pass ? "SKIPPED" : r.pass ? "PASS" : "FAIL";
    os << r.name << ": " << verdict << " ("
       << (r.kind == CheckKind::deterministic ? "deterministic" : "expectation") << ", "
       << r.violations() << "/" << r.rows.size() << " violations, worst slack "
       << num(r.worst_slack()) << ", seeds " << r.seeds << ")";
    for (const auto& f : r.flags) os << " [" << f << "]";
    os << '\n';
  }
}

void write_report_csv(std::ostream& os, const std::vector<BoundReport>& reports) {
  os << "bound_name,k,lhs,rhs,slack,verdict\n";
  for (const auto& r : reports)
    for (const auto& row : r.rows)
      os << r.name << ',' << row.k << ',' << num(row.lhs) << ',' << num(row.rhs) << ','
         << num(row.slack) << ',' << (row.pass ? "pass" : "fail") << '\n';
}

}  // namespace bcd
