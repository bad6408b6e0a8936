#include "blockcd/algorithms.hpp"

#include "blockcd/error.hpp"
#include "blockcd/problems.hpp"
#include "blockcd/sampling.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bcd {

namespace {

using Clock = std::chrono::steady_clock;

class Recorder {
 public:
  explicit Recorder(const Diagnostics& diag) : diag_(diag), start_(Clock::now()) {}

  void push(TraceRow row, const Vector& x) {
    if (diag_.record_wall_time)
      row.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start_).count();
    trace.rows.push_back(row);
    if (diag_.on_row) diag_.on_row(row);
    if (diag_.record_iterates) trace.iterates.push_back(x);
  }

  RunTrace trace;

 private:
  const Diagnostics& diag_;
  Clock::time_point start_;
};

void check_F(double F, std::size_t k) {
  if (std::isnan(F) || (k > 0 && !std::isfinite(F)))
    throw NonFiniteError("objective became non-finite at iteration " + std::to_string(k), k);
}

double stationarity_over(const Objective& prob, const std::vector<Range>& blocks,
                         const Vector& diag, const Vector& x, const Vector& residual) {
  double s = 0.0;
  for (const Range& r : blocks)
    s += metric_norm_sq(prob.grad_rows(r, x) + residual.segment(r.offset, r.size),
                        diag.segment(r.offset, r.size), true);
  return s;
}

void check_start(const Objective& prob, const Vector& x0, std::size_t K, double eta) {
  if (K < 1) throw std::invalid_argument("K must be at least 1");
  if (x0.size() != prob.dim()) throw std::invalid_argument("x0 has the wrong dimension");
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
}

const DiagonalMetric& require_metric(const std::optional<DiagonalMetric>& m, const Objective& prob) {
  if (!m) throw std::invalid_argument("a metric is required");
  if (m->dim() != prob.dim()) throw std::invalid_argument("metric has the wrong dimension");
  return *m;
}

// P-CCD over an arbitrary list of coordinate ranges; a single range is
// the simultaneous (proximal gradient) method.
RunResult run_deterministic(const Objective& prob, const Regularizer& reg, const PccdConfig& cfg,
                            const std::vector<Range>& blocks, const BlockPartition& metric_part) {
  check_start(prob, cfg.x0, cfg.K, cfg.eta);
  auto n = prob.num_components();
  if (!n) throw std::invalid_argument("exact block gradients need a finite sum");
  const auto nn = *n;

  Vector diag;
  if (cfg.backtracking) {
    if (!(cfg.backtrack.growth > 1.0)) throw std::invalid_argument("backtracking growth must exceed 1");
    if (!(cfg.backtrack.init > 0.0)) throw std::invalid_argument("backtracking init must be positive");
    diag = Vector::Constant(prob.dim(), cfg.backtrack.init);
  } else {
    diag = require_metric(cfg.metric, prob).diag();
  }
  std::vector<double> L(blocks.size(), cfg.backtrack.init);

  Recorder rec(cfg.diagnostics);
  Vector x = cfg.x0;
  TraceRow row0;
  row0.F = composite_value(prob, reg, x);
  check_F(row0.F, 0);
  rec.push(row0, x);

  Vector residual(prob.dim());
  Vector best_x = x;
  double best_v = std::numeric_limits<double>::infinity();
  std::size_t best_k = 1;
  std::uint64_t evals = 0;
  double work = 0.0;

  for (std::size_t k = 1; k <= cfg.K; ++k) {
    double v = 0.0, w = 0.0;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
      const Range r = blocks[bi];
      const Vector g = prob.grad_rows(r, x);
      const Vector center = x.segment(r.offset, r.size);
      if (cfg.backtracking) {
        double Lj = cfg.backtrack_reset ? cfg.backtrack.init : L[bi];
        const double f_old = prob.value(x);
        for (int t = 0;; ++t) {
          if (t > cfg.backtrack.max_growths)
            throw Error("backtracking exceeded " + std::to_string(cfg.backtrack.max_growths) +
                        " growth steps at iteration " + std::to_string(k));
          const Vector lam = Vector::Constant(r.size, Lj);
          const Vector xn = reg.metric_prox(center, g, cfg.eta, lam);
          const Vector step = xn - center;
          Vector y = x;
          y.segment(r.offset, r.size) = xn;
          const double f_new = prob.value(y);
          if (std::isfinite(f_new) &&
              block_descent_holds(f_new, f_old, g.dot(step), Lj, step.squaredNorm()))
            break;
          Lj *= cfg.backtrack.growth;
        }
        L[bi] = Lj;
        diag.segment(r.offset, r.size).setConstant(Lj);
      }
      const auto lam = diag.segment(r.offset, r.size);
      const Vector xn = reg.metric_prox(center, g, cfg.eta, lam);
      const Vector rp = reg.prox_subgradient(center, g, cfg.eta, lam, xn);
      residual.segment(r.offset, r.size) = rp;
      v += metric_norm_sq(xn - center, lam);
      if (cfg.diagnostics.record_u) w += metric_norm_sq(g + rp, lam, true);
      x.segment(r.offset, r.size) = xn;
      evals += nn;
      work += static_cast<double>(nn) * static_cast<double>(r.size);
    }
    TraceRow row;
    row.k = k;
    row.F = composite_value(prob, reg, x);
    check_F(row.F, k);
    row.s = stationarity_over(prob, blocks, diag, x, residual);
    row.v = v;
    if (cfg.diagnostics.record_u) {
      row.u = 0.0;
      row.w = w;
    }
    row.grad_component_evals = evals;
    row.work = work;
    rec.push(row, x);
    if (v < best_v) {
      best_v = v;
      best_x = x;
      best_k = k;
    }
  }
  rec.trace.output_index = best_k;
  return {best_x, std::move(rec.trace), DiagonalMetric(diag, metric_part)};
}

// VR-CCD over a list of ranges; a single range gives the full-vector
// PAGE estimator.
RunResult run_stochastic(const Objective& prob, const Regularizer& reg, const VrccdConfig& cfg,
                         const std::vector<Range>& blocks) {
  check_start(prob, cfg.x0, cfg.K, cfg.eta);
  const DiagonalMetric& metric = require_metric(cfg.metric, prob);
  const auto n = prob.num_components();
  if (!(cfg.p >= 0.0 && cfg.p <= 1.0)) throw std::invalid_argument("p must lie in (0, 1]");
  if (cfg.p == 0.0 && !cfg.eta_override)
    throw std::invalid_argument("p = 0 is outside (0, 1]; needs the override flag");
  if (cfg.b < 1 || cfg.bprime < 1) throw std::invalid_argument("batch sizes must be positive");
  if (cfg.bprime > cfg.b) throw std::invalid_argument("b' must not exceed b");
  if (n && cfg.b > *n) throw std::invalid_argument("b must not exceed n");
  if (cfg.eta_bound && cfg.eta > *cfg.eta_bound && !cfg.eta_override)
    throw std::invalid_argument("eta exceeds the admissible bound; set the override flag to run anyway");
  if (!n && cfg.diagnostics.record_u)
    throw std::invalid_argument("u_k recording needs a finite sum");

  const Vector& diag = metric.diag();
  const Index d = prob.dim();
  const bool shared = cfg.sharing == SampleSharing::shared_per_cycle;
  RngStream switch_rng(cfg.seed, "switch");
  RngStream batch_rng(cfg.seed, "batch");
  RngStream output_rng(cfg.seed, "output");
  const std::size_t out_k = 1 + static_cast<std::size_t>(output_rng.uniform_index(cfg.K));

  auto full_branch = [&](const std::vector<ComponentId>& batch, Range r, const Vector& x) -> Vector {
    if (n && cfg.b == *n) return prob.grad_rows(r, x);
    return prob.minibatch_grad_rows(batch, r, x);
  };
  auto diff_branch = [&](const std::vector<ComponentId>& batch, Range r, const Vector& x,
                         const Vector& y) -> Vector {
    if (n && cfg.bprime == *n) return prob.grad_rows(r, x) - prob.grad_rows(r, y);
    return prob.minibatch_grad_diff_rows(batch, r, x, y);
  };

  Recorder rec(cfg.diagnostics);
  Vector x_km1 = cfg.x0;  // x_{k-1}
  Vector x_km2 = cfg.x0;  // x_{k-2}
  Vector g_prev(d);
  {
    const auto batch0 = prob.draw_batch(batch_rng, cfg.b);
    for (const Range& r : blocks) g_prev.segment(r.offset, r.size) = full_branch(batch0, r, x_km1);
  }
  std::uint64_t evals = cfg.b;
  double work = static_cast<double>(cfg.b) * static_cast<double>(d);

  TraceRow row0;
  row0.F = composite_value(prob, reg, x_km1);
  check_F(row0.F, 0);
  if (cfg.diagnostics.record_u) {
    row0.u = 0.0;
    for (const Range& r : blocks)
      row0.u += metric_norm_sq(g_prev.segment(r.offset, r.size) - prob.grad_rows(r, x_km1),
                               diag.segment(r.offset, r.size), true);
  }
  row0.grad_component_evals = evals;
  row0.work = work;
  rec.push(row0, x_km1);

  Vector x_out = x_km1;
  Vector residual(d);
  for (std::size_t k = 1; k <= cfg.K; ++k) {
    Vector x = x_km1;
    Branch branch = Branch::full_batch;
    std::vector<ComponentId> batch;
    if (shared) {
      branch = bernoulli_switch(switch_rng, cfg.p);
      batch = prob.draw_batch(batch_rng, branch == Branch::full_batch ? cfg.b : cfg.bprime);
      evals += batch.size();
    }
    double v = 0.0, u = 0.0, w = 0.0;
    for (const Range& r : blocks) {
      if (!shared) {
        branch = bernoulli_switch(switch_rng, cfg.p);
        batch = prob.draw_batch(batch_rng, branch == Branch::full_batch ? cfg.b : cfg.bprime);
        evals += batch.size();
      }
      work += static_cast<double>(batch.size()) * static_cast<double>(r.size);
      Vector g;
      if (branch == Branch::full_batch) {
        g = full_branch(batch, r, x);
      } else {
        // x_{k-2,j}: earlier blocks from x_{k-1}, the rest from x_{k-2}
        Vector y(d);
        y.head(r.offset) = x_km1.head(r.offset);
        y.tail(d - r.offset) = x_km2.tail(d - r.offset);
        g = g_prev.segment(r.offset, r.size) + diff_branch(batch, r, x, y);
      }
      const auto lam = diag.segment(r.offset, r.size);
      const Vector center = x.segment(r.offset, r.size);
      const Vector xn = reg.metric_prox(center, g, cfg.eta, lam);
      const Vector rp = reg.prox_subgradient(center, g, cfg.eta, lam, xn);
      if (cfg.diagnostics.record_u) {
        const Vector exact = prob.grad_rows(r, x);
        u += metric_norm_sq(g - exact, lam, true);
        w += metric_norm_sq(exact + rp, lam, true);
      }
      residual.segment(r.offset, r.size) = rp;
      v += metric_norm_sq(xn - center, lam);
      g_prev.segment(r.offset, r.size) = g;
      x.segment(r.offset, r.size) = xn;
    }
    x_km2 = std::move(x_km1);
    x_km1 = x;

    TraceRow row;
    row.k = k;
    row.F = composite_value(prob, reg, x);
    check_F(row.F, k);
    row.s = stationarity_over(prob, blocks, diag, x, residual);
    row.v = v;
    if (cfg.diagnostics.record_u) {
      row.u = u;
      row.w = w;
    }
    row.grad_component_evals = evals;
    row.work = work;
    rec.push(row, x);
    if (k == out_k) x_out = x;
  }
  rec.trace.output_index = out_k;
  return {x_out, std::move(rec.trace), metric};
}

}  // namespace

RunResult pccd_run(const Objective& prob, const Regularizer& reg, const PccdConfig& cfg) {
  return run_deterministic(prob, reg, cfg, prob.partition().ranges(), prob.partition());
}

RunResult vrccd_run(const Objective& prob, const Regularizer& reg, const VrccdConfig& cfg) {
  return run_stochastic(prob, reg, cfg, prob.partition().ranges());
}

RunResult baseline_prox_gd(const Objective& prob, const Regularizer& reg, const PccdConfig& cfg) {
  return run_deterministic(prob, reg, cfg, {Range{0, prob.dim()}}, BlockPartition::single(prob.dim()));
}

RunResult baseline_page(const Objective& prob, const Regularizer& reg, const VrccdConfig& cfg) {
  return run_stochastic(prob, reg, cfg, {Range{0, prob.dim()}});
}

RunResult baseline_sgd(const Objective& prob, const Regularizer& reg, VrccdConfig cfg) {
  cfg.p = 1.0;
  return baseline_page(prob, reg, cfg);
}

double stationarity_sq(const Objective& prob, const DiagonalMetric& metric, const Vector& x,
                       const Vector& residual) {
  if (residual.size() != prob.dim())
    throw std::invalid_argument("residual must hold one subgradient entry per coordinate");
  if (metric.dim() != prob.dim()) throw std::invalid_argument("metric has the wrong dimension");
  return metric_norm_sq(prob.full_grad(x) + residual, metric, true);
}

}  // namespace bcd
