#include "blockcd/suites.hpp"

#include "blockcd/error.hpp"
#include "blockcd/experiment.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>

namespace bcd {

namespace {

using Lines = std::vector<std::pair<std::string, std::string>>;

std::string to_text(const Lines& lines) {
  std::string t;
  for (const auto& [k, v] : lines) t += k + " = " + v + "\n";
  return t;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Reports from many runs folded together by bound name.
class Tally {
 public:
  void add(const std::vector<BoundReport>& reps) {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& r : reps) {
      auto it = std::find_if(merged_.begin(), merged_.end(), [&](const BoundReport& m) { return m.name == r.name; });
      if (it == merged_.end()) {
        merged_.push_back(r);
        continue;
      }
      it->rows.insert(it->rows.end(), r.rows.begin(), r.rows.end());
      it->pass = it->pass && r.pass;
      it->seeds += r.seeds;
      for (const auto& f : r.flags)
        if (std::find(it->flags.begin(), it->flags.end(), f) == it->flags.end()) it->flags.push_back(f);
    }
  }
  void outcome(int code) {
    std::lock_guard<std::mutex> lock(mu_);
    worst_ = std::max(worst_, code);
    ++runs_;
  }
  const std::vector<BoundReport>& reports() const { return merged_; }
  int worst() const { return worst_; }
  std::size_t runs() const { return runs_; }

  std::string describe() const {
    std::string s = std::to_string(runs_) + " runs";
    for (const auto& r : merged_)
      s += "; " + r.name + " " + std::to_string(r.violations()) + "/" + std::to_string(r.rows.size()) +
           " violations, worst slack " + fmt(r.worst_slack());
    return s;
  }

 private:
  std::mutex mu_;
  std::vector<BoundReport> merged_;
  int worst_ = 0;
  std::size_t runs_ = 0;
};

void run_configs(const std::vector<Lines>& configs, const SuiteOptions& opts, Tally& tally) {
  parallel_for(configs.size(), opts.jobs, [&](std::size_t i) {
    RunOptions ro;
    ro.jobs = 1;
    ro.write_files = false;
    auto out = run_experiment(parse_config(to_text(configs[i])), ro);
    tally.add(out.reports);
    tally.outcome(out.exit_code);
  });
}

// Exact comparison against a fixed tolerance, without the rounding allowance
// BoundReport::add applies.
void add_strict(BoundReport& rep, std::size_t k, double lhs, double limit) {
  BoundRow row{k, lhs, limit, limit - lhs, lhs <= limit};
  rep.pass = rep.pass && row.pass;
  rep.rows.push_back(row);
}

std::uint64_t base_seed(const SuiteOptions& o, std::uint64_t preset) { return preset + o.seed.value_or(0); }

SuiteResult from_tally(const Tally& t) {
  SuiteResult r;
  r.exit_code = t.worst();
  r.pass = t.worst() == 0 && !t.reports().empty();
  r.summary = t.describe();
  r.reports = t.reports();
  return r;
}

// ---------------------------------------------------------------- 1

SuiteResult suite_lemma1(const SuiteOptions& opts) {
  const std::uint64_t base = base_seed(opts, 1000);
  std::size_t cases = 0, bad = 0;
  double worst = 0.0;
  BoundReport rep{"lemma1_identity"};
  for (std::size_t i = 0; i < 50; ++i) {
    const std::uint64_t seed = base + i;
    const std::size_t n = 4 + i % 7;
    const Index d = 6, m = 3;
    const auto part = BlockPartition::uniform(d, m);
    std::unique_ptr<Objective> prob;
    std::optional<DiagonalMetric> metric;
    RngStream rng(seed, "lemma1-probe");
    if (i % 2 == 0) {
      auto q = generate_quadratic(seed, n, d, part, 5.0, i % 4 == 0);
      metric = quadratic_block_metric(q);
      prob = std::make_unique<QuadraticFiniteSum>(std::move(q));
    } else {
      prob = std::make_unique<SigmoidClassification>(generate_classification(seed, n, d, part, 1.0));
      Vector diag(d);
      for (Index k = 0; k < d; ++k) diag[k] = 0.5 + rng.uniform();
      metric = DiagonalMetric(diag, part);
    }
    Vector x(d);
    for (Index k = 0; k < d; ++k) x[k] = rng.normal() / std::sqrt(static_cast<double>(d));
    const Index j = static_cast<Index>(i % m);
    for (std::uint64_t b = 1; b <= n; ++b) {
      const auto res = lemma1_enumeration_check(*prob, *metric, x, j, b);
      // b = n makes both sides zero; measure against the per-sample variance there
      const double scale = res.rhs > 0.0 ? res.rhs : res.variance;
      const double err = std::abs(res.lhs - res.rhs) / scale;
      worst = std::max(worst, err);
      ++cases;
      add_strict(rep, cases, err, 1e-10);
      if (!(err <= 1e-10)) ++bad;
    }
  }
  SuiteResult r;
  r.pass = bad == 0;
  r.exit_code = r.pass ? 0 : 2;
  r.summary = "50 instances, " + std::to_string(cases) + " (instance, b) pairs, " + std::to_string(bad) +
              " above 1e-10, worst relative error " + fmt(worst);
  r.reports.push_back(rep);
  return r;
}

// ---------------------------------------------------------------- 2-4

SuiteResult suite_descent(const SuiteOptions& opts) {
  const std::uint64_t base = base_seed(opts, 2000);
  const Index dims[] = {10, 25, 50, 100};
  std::vector<Lines> cfgs;
  for (std::size_t i = 0; i < 100; ++i) {
    const Index d = dims[i % 4];
    const Index ms[] = {1, 2, 5, d};
    const Index m = ms[(i / 4) % 4];
    Lines c = {{"problem.d", std::to_string(d)},
               {"problem.m", std::to_string(m)},
               {"problem.n", "20"},
               {"problem.seed", std::to_string(base + i)},
               {"problem.x0_scale", "1"},
               {"algorithm.name", "pccd"},
               {"algorithm.K", "30"},
               {"diagnostics.checks", "descent"}};
    switch (i % 3) {
      case 0:
        c.push_back({"problem.family", "quadratic"});
        c.push_back({"problem.condition_number", "20"});
        c.push_back({"problem.reg", i % 2 ? "l1(0.05)" : "zero"});
        break;
      case 1:
        c.push_back({"problem.family", "quadratic"});
        c.push_back({"problem.convex", "false"});
        c.push_back({"problem.condition_number", "5"});
        c.push_back({"problem.reg", "box(-1,1)"});
        break;
      default:
        c.push_back({"problem.family", "sigmoid"});
        c.push_back({"problem.reg", "l1(0.001)"});
        c.push_back({"lambda.mode", "backtracking"});
        c.push_back({"lambda.init", "0.01"});
        break;
    }
    cfgs.push_back(c);
  }
  Tally t;
  run_configs(cfgs, opts, t);
  return from_tally(t);
}

SuiteResult suite_theorem1(const SuiteOptions& opts) {
  const std::uint64_t base = base_seed(opts, 3000);
  std::vector<Lines> cfgs;
  for (std::size_t i = 0; i < 100; ++i) {
    const Index d = 10 + static_cast<Index>(i % 5) * 10;  // 10..50
    const Index m = 1 + static_cast<Index>(i % 5);
    cfgs.push_back({{"problem.family", "quadratic"},
                    {"problem.d", std::to_string(d)},
                    {"problem.m", std::to_string(m)},
                    {"problem.n", "10"},
                    {"problem.seed", std::to_string(base + i)},
                    {"problem.condition_number", std::to_string(2 + i % 30)},
                    {"problem.reg", "l1(0.1)"},
                    {"problem.x0_scale", "1"},
                    {"smoothness.q_kind", "mean_function"},
                    {"algorithm.name", "pccd"},
                    {"algorithm.K", "500"},
                    {"diagnostics.checks", "descent,lemma2,lemma3,theorem1"}});
  }
  Tally t;
  run_configs(cfgs, opts, t);
  return from_tally(t);
}

bool one_cycle_exact(std::uint64_t seed, double& gap) {
  const Index d = 8;
  const auto part = BlockPartition::uniform(d, d);
  auto q = generate_quadratic(seed, 5, d, part, 1.0, true);  // every A_i = I
  PccdConfig pc;
  pc.K = 1;
  pc.metric = quadratic_block_metric(q);
  pc.x0 = Vector::Zero(d);
  pc.diagnostics.record_iterates = true;
  const auto res = pccd_run(q, Regularizer::zero(), pc);
  const auto ref = reference_exact_quadratic(q);
  gap = ref.gap(q, Regularizer::zero(), res.trace.iterates[1]);
  return gap <= 1e-20 && pc.metric->diag() == Vector::Ones(d);
}

SuiteResult suite_corollary1(const SuiteOptions& opts) {
  const std::uint64_t base = base_seed(opts, 4000);
  std::vector<Lines> cfgs;
  for (std::size_t i = 0; i < 100; ++i) {
    const Index d = 8 + static_cast<Index>(i % 4) * 8;
    const Index ms[] = {1, 2, 4, d};
    cfgs.push_back({{"problem.family", "quadratic"},
                    {"problem.d", std::to_string(d)},
                    {"problem.m", std::to_string(ms[(i / 4) % 4])},
                    {"problem.n", "10"},
                    {"problem.seed", std::to_string(base + i)},
                    {"problem.condition_number", std::to_string(2 + 3 * (i % 17))},
                    {"problem.x0_scale", "1"},
                    {"smoothness.q_kind", "mean_function"},
                    {"algorithm.name", "pccd"},
                    {"algorithm.K", "200"},
                    {"diagnostics.checks", "corollary1"}});
  }
  Tally t;
  run_configs(cfgs, opts, t);
  SuiteResult r = from_tally(t);
  double gap = 0.0;
  const bool exact = one_cycle_exact(base, gap);
  r.summary += "; one-cycle identity case gap " + fmt(gap);
  if (!exact) {
    r.pass = false;
    r.exit_code = std::max(r.exit_code, 2);
  }
  return r;
}

// ---------------------------------------------------------------- 5-8

SuiteResult suite_lemmas56(const SuiteOptions& opts) {
  const std::uint64_t base = base_seed(opts, 5000);
  std::vector<Lines> cfgs;
  for (std::size_t i = 0; i < 50; ++i) {
    const Index ms[] = {2, 4, 5, 10};
    Lines c = {{"problem.family", "quadratic"},
               {"problem.d", "20"},
               {"problem.m", std::to_string(ms[i % 4])},
               {"problem.n", "16"},
               {"problem.seed", std::to_string(base + i)},
               {"problem.x0_scale", "1"},
               {"algorithm.name", "vrccd"},
               {"algorithm.sample_sharing", "fresh_per_block"},
               {"algorithm.K", "200"},
               {"algorithm.p", i % 2 ? "0.25" : "0.6"},
               {"algorithm.b", i % 3 ? "4" : "8"},
               {"algorithm.bprime", "2"},
               {"seeds.base", std::to_string(base + 100 + i)},
               {"diagnostics.record_u", "true"},
               {"diagnostics.checks", "lemma5,lemma6"}};
    switch (i % 3) {
      case 0: c.push_back({"problem.reg", "zero"}); break;
      case 1:
        c.push_back({"problem.convex", "false"});
        c.push_back({"problem.reg", "box(-1,1)"});
        break;
      default: c.push_back({"problem.reg", "l1(0.05)"}); break;
    }
    cfgs.push_back(c);
  }
  Tally t;
  run_configs(cfgs, opts, t);
  return from_tally(t);
}

Lines theorem3_config(std::uint64_t seed, std::size_t K) {
  return {{"problem.family", "quadratic"},
          {"problem.n", "256"},
          {"problem.d", "64"},
          {"problem.m", "4"},
          {"problem.seed", std::to_string(seed)},
          {"problem.condition_number", "10"},
          {"problem.x0_scale", "1"},
          {"algorithm.name", "vrccd"},
          {"algorithm.schedule", "finite_sum"},
          {"algorithm.K", std::to_string(K)},
          {"seeds.base", std::to_string(seed + 1)},
          {"seeds.count", "100"},
          {"diagnostics.checks", "theorem3"}};
}

SuiteResult run_seeded(const std::vector<Lines>& cfgs, const SuiteOptions& opts) {
  // seeds run in parallel inside each experiment
  Tally t;
  for (const auto& c : cfgs) {
    RunOptions ro;
    ro.jobs = opts.jobs;
    ro.write_files = false;
    auto out = run_experiment(parse_config(to_text(c)), ro);
    t.add(out.reports);
    t.outcome(out.exit_code);
  }
  return from_tally(t);
}

SuiteResult suite_theorem3(const SuiteOptions& opts) {
  const std::uint64_t base = base_seed(opts, 6000);
  std::vector<Lines> cfgs;
  for (std::size_t K : {10, 100, 1000}) cfgs.push_back(theorem3_config(base, K));
  return run_seeded(cfgs, opts);
}

SuiteResult suite_potential(const SuiteOptions& opts) {
  const std::uint64_t base = base_seed(opts, 7000);
  Lines common = {{"problem.family", "quadratic"},
                  {"problem.n", "64"},
                  {"problem.d", "16"},
                  {"problem.m", "4"},
                  {"problem.seed", std::to_string(base)},
                  {"problem.x0_scale", "1"},
                  {"algorithm.name", "vrccd"},
                  {"seeds.base", std::to_string(base + 1)},
                  {"diagnostics.record_u", "true"},
                  {"diagnostics.checks", "potential"}};
  Lines zero_var = common;
  zero_var.insert(zero_var.end(), {{"algorithm.K", "200"},
                                   {"algorithm.p", "0.5"},
                                   {"algorithm.b", "64"},
                                   {"algorithm.bprime", "64"},
                                   {"seeds.count", "10"}});
  Lines generic = common;
  generic.insert(generic.end(), {{"algorithm.K", "100"},
                                 {"algorithm.p", "0.25"},
                                 {"algorithm.b", "16"},
                                 {"algorithm.bprime", "4"},
                                 {"seeds.count", "200"}});
  Tally t;
  for (const auto& [label, c] : {std::pair{"pathwise", zero_var}, std::pair{"expectation", generic}}) {
    RunOptions ro;
    ro.jobs = opts.jobs;
    ro.write_files = false;
    auto out = run_experiment(parse_config(to_text(c)), ro);
    for (auto& r : out.reports) r.name += std::string("_") + label;
    t.add(out.reports);
    t.outcome(out.exit_code);
  }
  return from_tally(t);
}

SuiteResult suite_arith_cost(const SuiteOptions& opts) {
  const std::uint64_t base = base_seed(opts, 8000);
  Lines common = {{"problem.family", "quadratic"},
                  {"problem.n", "64"},
                  {"problem.d", "16"},
                  {"problem.m", "16"},
                  {"problem.seed", std::to_string(base)},
                  {"seeds.base", std::to_string(base + 1)},
                  {"diagnostics.checks", "arith_cost"}};
  auto with = [&](Lines extra) {
    Lines c = common;
    c.insert(c.end(), extra.begin(), extra.end());
    return c;
  };
  std::vector<Lines> cfgs = {
      with({{"algorithm.name", "vrccd"}, {"algorithm.schedule", "finite_sum"}, {"algorithm.K", "10000"}}),
      with({{"algorithm.name", "vroccd"}, {"algorithm.schedule", "finite_sum"}, {"algorithm.K", "100000"}}),
      with({{"algorithm.name", "vrccd"}, {"algorithm.p", "1"}, {"algorithm.b", "8"}, {"algorithm.K", "10000"}}),
      with({{"algorithm.name", "vrccd"},
            {"algorithm.p", "0"},
            {"algorithm.b", "64"},
            {"algorithm.bprime", "8"},
            {"algorithm.eta", "0.001"},
            {"algorithm.eta_override", "true"},
            {"algorithm.K", "10000"}}),
  };
  const char* labels[] = {"fresh", "shared", "p1", "p0"};
  Tally t;
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    RunOptions ro;
    ro.jobs = opts.jobs;
    ro.write_files = false;
    auto out = run_experiment(parse_config(to_text(cfgs[i])), ro);
    for (auto& r : out.reports) r.name += std::string("_") + labels[i];
    t.add(out.reports);
    t.outcome(out.exit_code);
  }
  return from_tally(t);
}

// ---------------------------------------------------------------- 9

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

bool same_bits(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  for (Index k = 0; k < a.size(); ++k)
    if (!same_bits(a[k], b[k])) return false;
  return true;
}

// Compares the trajectory, not the bookkeeping counters.
std::size_t mismatches(const RunResult& a, const RunResult& b) {
  std::size_t bad = 0;
  if (a.trace.rows.size() != b.trace.rows.size()) return 1;
  for (std::size_t k = 0; k < a.trace.rows.size(); ++k) {
    const auto &ra = a.trace.rows[k], &rb = b.trace.rows[k];
    bad += !same_bits(ra.F, rb.F) || !same_bits(ra.s, rb.s) || !same_bits(ra.v, rb.v);
  }
  if (a.trace.iterates.size() != b.trace.iterates.size()) ++bad;
  else
    for (std::size_t k = 0; k < a.trace.iterates.size(); ++k) bad += !same_bits(a.trace.iterates[k], b.trace.iterates[k]);
  return bad;
}

struct EquivInstance {
  std::unique_ptr<Objective> blocked;  // m > 1
  std::unique_ptr<Objective> single;   // same data, one block
  Regularizer reg = Regularizer::zero();
  DiagonalMetric metric_single;
  DiagonalMetric metric_blocked;
};

EquivInstance equivalence_instance(std::uint64_t seed, int kind) {
  const Index d = 12;
  const auto part = BlockPartition::uniform(d, 4);
  const auto one = BlockPartition::single(d);
  EquivInstance e{nullptr, nullptr, Regularizer::zero(), DiagonalMetric::identity(one), DiagonalMetric::identity(part)};
  if (kind == 2) {
    auto s = generate_classification(seed, 24, d, part, 1.0);
    e.single = std::make_unique<SigmoidClassification>(s.with_partition(one));
    e.blocked = std::make_unique<SigmoidClassification>(std::move(s));
    e.reg = Regularizer::l1(0.01);
    RngStream rng(seed, "equiv-metric");
    Vector diag(d);
    for (Index k = 0; k < d; ++k) diag[k] = 0.2 + rng.uniform();
    e.metric_single = DiagonalMetric(diag, one);
    e.metric_blocked = DiagonalMetric(diag, part);
    return e;
  }
  auto q = generate_quadratic(seed, 24, d, part, 10.0, kind == 0);
  auto qs = q.with_partition(one);
  e.metric_single = quadratic_block_metric(qs);
  e.metric_blocked = quadratic_block_metric(q);
  e.reg = kind == 0 ? Regularizer::l1(0.05) : Regularizer::box(-1.0, 1.0);
  e.single = std::make_unique<QuadraticFiniteSum>(std::move(qs));
  e.blocked = std::make_unique<QuadraticFiniteSum>(std::move(q));
  return e;
}

SuiteResult suite_equivalence(const SuiteOptions& opts) {
  const std::uint64_t base = base_seed(opts, 9000);
  std::size_t compared = 0, bad_gd = 0, bad_vr = 0, bad_sgd = 0;
  for (std::uint64_t i = 0; i < 12; ++i) {
    const auto e = equivalence_instance(base + i, static_cast<int>(i % 3));
    const Index d = e.single->dim();
    Vector x0(d);
    RngStream rng(base + i, "equiv-x0");
    for (Index k = 0; k < d; ++k) x0[k] = 0.5 * rng.normal();
    if (e.reg.kind() == Regularizer::Kind::box) x0 = x0.cwiseMax(-1.0).cwiseMin(1.0);

    // m = 1 P-CCD against the full-vector proximal gradient method
    for (bool bt : {false, true}) {
      PccdConfig pc;
      pc.K = 40;
      pc.x0 = x0;
      pc.metric = e.metric_single;
      pc.backtracking = bt;
      pc.backtrack.init = 0.05;
      pc.diagnostics.record_iterates = true;
      const auto a = pccd_run(*e.single, e.reg, pc);
      const auto b = baseline_prox_gd(*e.blocked, e.reg, pc);
      bad_gd += mismatches(a, b) + !same_bits(a.x, b.x);
      ++compared;
    }

    // p = 1, b = n VR-CCD against P-CCD with the same eta
    for (auto sharing : {SampleSharing::fresh_per_block, SampleSharing::shared_per_cycle}) {
      VrccdConfig vc;
      vc.K = 40;
      vc.eta = 0.7;
      vc.p = 1.0;
      vc.b = *e.blocked->num_components();
      vc.bprime = 3;
      vc.metric = e.metric_blocked;
      vc.x0 = x0;
      vc.sharing = sharing;
      vc.seed = base + 50 + i;
      vc.diagnostics.record_iterates = true;
      const auto a = vrccd_run(*e.blocked, e.reg, vc);
      PccdConfig pc;
      pc.K = 40;
      pc.x0 = x0;
      pc.eta = 0.7;
      pc.metric = e.metric_blocked;
      pc.diagnostics.record_iterates = true;
      const auto b = pccd_run(*e.blocked, e.reg, pc);
      bad_vr += mismatches(a, b);
      ++compared;
    }

    // m = 1 SCCD against SGD with a shared seed
    for (auto sharing : {SampleSharing::fresh_per_block, SampleSharing::shared_per_cycle}) {
      VrccdConfig vc;
      vc.K = 40;
      vc.eta = 0.3;
      vc.p = 1.0;
      vc.b = 5;
      vc.bprime = 1;
      vc.metric = e.metric_single;
      vc.x0 = x0;
      vc.sharing = sharing;
      vc.seed = base + 80 + i;
      vc.diagnostics.record_iterates = true;
      const auto a = vrccd_run(*e.single, e.reg, vc);
      const auto b = baseline_sgd(*e.blocked, e.reg, vc);
      bad_sgd += mismatches(a, b) + !same_bits(a.x, b.x) + (a.trace.output_index != b.trace.output_index);
      for (std::size_t k = 0; k < a.trace.rows.size(); ++k)
        bad_sgd += a.trace.rows[k].grad_component_evals != b.trace.rows[k].grad_component_evals;
      ++compared;
    }
  }
  SuiteResult r;
  const std::size_t bad = bad_gd + bad_vr + bad_sgd;
  r.pass = bad == 0;
  r.exit_code = r.pass ? 0 : 2;
  r.summary = std::to_string(compared) + " run pairs; mismatches: prox-gd " + std::to_string(bad_gd) +
              ", vr-ccd " + std::to_string(bad_vr) + ", sgd " + std::to_string(bad_sgd);
  BoundReport rep{"equivalence"};
  add_strict(rep, 0, static_cast<double>(bad), 0.0);
  r.reports.push_back(rep);
  return r;
}

// ---------------------------------------------------------------- 10

double fd_error(const std::function<double(const Vector&)>& f, const Vector& x, Range r, const Vector& g) {
  const double h = 1e-5;
  Vector fd(r.size);
  Vector y = x;
  for (Index t = 0; t < r.size; ++t) {
    const Index c = r.offset + t;
    y[c] = x[c] + h;
    const double fp = f(y);
    y[c] = x[c] - h;
    const double fm = f(y);
    y[c] = x[c];
    fd[t] = (fp - fm) / (2.0 * h);
  }
  return (fd - g).norm() / std::max(1.0, g.norm());
}

double grid_argmin(const std::function<double(double)>& phi, double lo, double hi, double step) {
  double best_x = lo, best = phi(lo);
  const auto count = static_cast<long long>(std::floor((hi - lo) / step));
  for (long long t = 1; t <= count + 1; ++t) {
    const double x = std::min(hi, lo + static_cast<double>(t) * step);
    const double v = phi(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  return best_x;
}

SuiteResult suite_gradient_prox(const SuiteOptions& opts) {
  const std::uint64_t base = base_seed(opts, 10000);
  std::size_t bad_fd = 0, bad_prox = 0;
  double worst_fd = 0.0, worst_prox = 0.0;
  BoundReport fd_rep{"finite_difference"}, prox_rep{"prox_grid"};
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const std::uint64_t seed = base + i;
    RngStream rng(seed, "fd-probe");
    const Index d = 12;
    const auto part = BlockPartition::uniform(d, 3 + static_cast<Index>(i % 2));
    std::unique_ptr<Objective> prob;
    switch (i % 3) {
      case 0:
        prob = std::make_unique<QuadraticFiniteSum>(generate_quadratic(seed, 8, d, part, 10.0, i % 2 == 0));
        break;
      case 1: prob = std::make_unique<SigmoidClassification>(generate_classification(seed, 8, d, part, 1.0)); break;
      default: prob = std::make_unique<StreamingQuadratic>(generate_streaming(seed, d, part, 10.0, 1.0)); break;
    }
    Vector x(d);
    for (Index k = 0; k < d; ++k) x[k] = rng.normal() / std::sqrt(static_cast<double>(d));
    const Index j = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(part.num_blocks())));
    const Range r = part.range(j);
    double err = fd_error([&](const Vector& y) { return prob->value(y); }, x, r, prob->block_grad(j, x));
    const ComponentId comp = prob->num_components() ? rng.uniform_index(*prob->num_components()) : rng.next();
    err = std::max(err, fd_error([&](const Vector& y) { return prob->component_value(comp, y); }, x, r,
                                 prob->component_block_grad(comp, j, x)));
    worst_fd = std::max(worst_fd, err);
    bad_fd += !(err <= 1e-6);
    add_strict(fd_rep, i, err, 1e-6);

    // scalar metric prox against a coarse-then-fine grid (convex in x)
    RngStream pr(seed, "prox-probe");
    Regularizer reg = Regularizer::zero();
    double w = 0.0;
    switch (i % 3) {
      case 0: break;
      case 1:
        w = 0.05 + 2.0 * pr.uniform();
        reg = Regularizer::l1(w);
        break;
      default: {
        const double lo = -2.0 * pr.uniform();
        reg = Regularizer::box(lo, lo + 0.1 + 2.0 * pr.uniform());
        break;
      }
    }
    const double c = 2.0 * pr.normal(), g = pr.normal();
    const double eta = 0.1 + 0.9 * pr.uniform(), lam = 0.1 + 9.9 * pr.uniform();
    const auto one = [](double v) { return Vector::Constant(1, v); };
    const double prox = reg.metric_prox(one(c), one(g), eta, one(lam))[0];
    auto phi = [&](double z) { return g * z + reg.value(one(z)) + lam / (2.0 * eta) * (z - c) * (z - c); };
    double lo = c - eta * (std::abs(g) + w) / lam - 1e-2, hi = c + eta * (std::abs(g) + w) / lam + 1e-2;
    if (reg.kind() == Regularizer::Kind::box) {
      lo = std::max(lo, reg.lo());
      hi = std::min(hi, reg.hi());
      if (lo > hi) lo = hi = c < reg.lo() ? reg.lo() : reg.hi();
    }
    const double coarse = grid_argmin(phi, lo, hi, 1e-3);
    const double fine = grid_argmin(phi, std::max(lo, coarse - 2e-3), std::min(hi, coarse + 2e-3), 1e-6);
    const double perr = std::abs(fine - prox);
    worst_prox = std::max(worst_prox, perr);
    bad_prox += !(perr <= 1e-5);
    add_strict(prox_rep, i, perr, 1e-5);
  }
  SuiteResult r;
  r.pass = bad_fd == 0 && bad_prox == 0;
  r.exit_code = r.pass ? 0 : 2;
  r.summary = "1000 gradient probes, " + std::to_string(bad_fd) + " above 1e-6 (worst " + fmt(worst_fd) +
              "); 1000 prox cases, " + std::to_string(bad_prox) + " above 1e-5 (worst " + fmt(worst_prox) + ")";
  r.reports = {fd_rep, prox_rep};
  return r;
}

using SuiteFn = SuiteResult (*)(const SuiteOptions&);

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> r = {
      {"lemma1_identity", suite_lemma1},   {"pccd_descent", suite_descent},
      {"theorem1", suite_theorem1},        {"corollary1_pl", suite_corollary1},
      {"lemmas5_6", suite_lemmas56},       {"theorem3", suite_theorem3},
      {"potential", suite_potential},      {"arith_cost", suite_arith_cost},
      {"equivalence", suite_equivalence},  {"gradient_prox", suite_gradient_prox},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, _] : registry()) n.push_back(name);
    return n;
  }();
  return names;
}

SuiteResult run_suite(const std::string& name, const SuiteOptions& opts) {
  const auto& reg = registry();
  auto it = std::find_if(reg.begin(), reg.end(), [&](const auto& e) { return e.first == name; });
  if (it == reg.end()) throw Error("unknown suite '" + name + "'");
  const auto start = std::chrono::steady_clock::now();
  SuiteResult r;
  try {
    r = it->second(opts);
  } catch (const std::exception& ex) {
    r.pass = false;
    r.exit_code = 3;
    r.summary = std::string("error: ") + ex.what();
  }
  r.criterion = static_cast<int>(it - reg.begin()) + 1;
  r.name = name;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!opts.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(opts.out_dir);
    std::ofstream txt(fs::path(opts.out_dir) / (name + "_report.txt"));
    txt << name << ": " << (r.pass ? "PASS" : "FAIL") << " - " << r.summary << '\n';
    write_report_text(txt, r.reports);
    std::ofstream csv(fs::path(opts.out_dir) / (name + "_report.csv"));
    write_report_csv(csv, r.reports);
    if (!txt || !csv) throw Error("cannot write suite report under '" + opts.out_dir + "'");
  }
  return r;
}

}  // namespace bcd
