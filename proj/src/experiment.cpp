#include "blockcd/experiment.hpp"

#include "blockcd/error.hpp"
#include "blockcd/sampling.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace bcd {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool full_vector(AlgoName a) {
  return a == AlgoName::prox_gd || a == AlgoName::page || a == AlgoName::sgd;
}

BlockPartition config_partition(const ProblemSpec& pr) {
  if (!pr.blocks.empty()) return BlockPartition(pr.blocks);
  return BlockPartition::uniform(pr.d, pr.m);
}

std::unique_ptr<Objective> repartition(const Objective& obj, const BlockPartition& part) {
  if (auto q = dynamic_cast<const QuadraticFiniteSum*>(&obj))
    return std::make_unique<QuadraticFiniteSum>(q->with_partition(part));
  if (auto s = dynamic_cast<const SigmoidClassification*>(&obj))
    return std::make_unique<SigmoidClassification>(s->with_partition(part));
  throw Error("cannot re-partition a " + obj.family() + " objective");
}

std::unique_ptr<Objective> load_objective(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto& pr = cfg.problem;
  const BlockPartition part = config_partition(pr);
  if (!pr.instance_path.empty()) {
    std::ifstream in(pr.instance_path);
    if (!in) throw Error("cannot open instance file '" + pr.instance_path + "'");
    auto obj = read_instance(in);
    if (obj->family() != to_string(pr.family))
      throw Error("instance file holds a " + obj->family() + " problem but problem.family is " +
                  to_string(pr.family));
    const bool user_blocks = cfg.source.count("problem.m") || cfg.source.count("problem.blocks");
    if (user_blocks) {
      if (part.dim() != obj->dim())
        throw Error("problem.m/blocks describe d = " + std::to_string(part.dim()) +
                    " but the instance has d = " + std::to_string(obj->dim()));
      obj = repartition(*obj, part);
    }
    return obj;
  }
  switch (pr.family) {
    case Family::quadratic:
      return std::make_unique<QuadraticFiniteSum>(
          generate_quadratic(seed, pr.n, pr.d, part, pr.condition_number, pr.convex));
    case Family::sigmoid:
      return std::make_unique<SigmoidClassification>(generate_classification(seed, pr.n, pr.d, part, pr.margin));
    case Family::streaming:
      return std::make_unique<StreamingQuadratic>(
          generate_streaming(seed, pr.d, part, pr.condition_number, pr.noise));
  }
  throw Error("unknown family");
}

std::string trace_file_name(const std::string& pattern, std::uint64_t seed, std::size_t count) {
  std::string out = pattern;
  const auto pos = out.find("{seed}");
  if (pos != std::string::npos) return out.replace(pos, 6, std::to_string(seed));
  if (count == 1) return out;
  fs::path p(out);
  return (p.parent_path() / (p.stem().string() + "_seed" + std::to_string(seed) + p.extension().string())).string();
}

BoundReport merge(const std::string& name, const std::vector<BoundReport>& parts) {
  BoundReport out{name};
  if (!parts.empty()) out.kind = parts.front().kind;
  out.seeds = parts.size();
  for (const auto& p : parts) {
    out.rows.insert(out.rows.end(), p.rows.begin(), p.rows.end());
    out.pass = out.pass && p.pass;
    for (const auto& f : p.flags)
      if (std::find(out.flags.begin(), out.flags.end(), f) == out.flags.end()) out.flags.push_back(f);
  }
  return out;
}

bool has_check(const ExperimentConfig& cfg, const std::string& c) {
  return std::find(cfg.checks.begin(), cfg.checks.end(), c) != cfg.checks.end();
}

// Hard (deterministic) reports fail with exit 2, the rest with exit 1.
bool is_hard(const BoundReport& r) { return r.kind == CheckKind::deterministic; }

struct CheckContext {
  const ExperimentConfig& cfg;
  const ProblemSetup& setup;
  ResolvedStep step;
};

double require_L_hat(const ProblemSetup& setup) {
  if (!setup.L) throw Error("this check needs L_hat: compute it from a quadratic metric or supply smoothness.L_hat");
  return setup.L->L_hat;
}

double require_mu(const ProblemSetup& setup) {
  if (!setup.mu) throw Error("this check needs the PL constant: set algorithm.mu");
  return *setup.mu;
}

Reference make_reference(const ProblemSetup& setup) {
  if (auto q = setup.quadratic(); q && setup.reg.kind() == Regularizer::Kind::zero && q->minimizer())
    return reference_exact_quadratic(*q);
  const DiagonalMetric metric =
      setup.metric ? *setup.metric : DiagonalMetric::identity(setup.objective->partition());
  return reference_solve(*setup.objective, setup.reg, metric, setup.mu, setup.x0);
}

std::vector<BoundReport> evaluate_checks(const CheckContext& ctx, const std::vector<RunTrace>& traces) {
  const auto& cfg = ctx.cfg;
  const auto& setup = ctx.setup;
  const auto& al = cfg.algorithm;
  std::vector<BoundReport> reports;
  if (cfg.checks.empty()) return reports;

  const std::string L_flag = "conditional: L_hat supplied, not computed";
  auto tag_L = [&](BoundReport& r) {
    if (setup.L_supplied) r.flags.push_back(L_flag);
  };

  std::optional<Reference> ref;
  auto reference = [&]() -> const Reference& {
    if (!ref) ref = make_reference(setup);
    return *ref;
  };
  auto delta0 = [&]() { return reference().gap(*setup.objective, setup.reg, setup.x0); };

  VrParams vp;
  vp.eta = ctx.step.eta;
  vp.p = al.p;
  vp.b = al.b;
  vp.bprime = al.bprime;
  vp.n = setup.objective->num_components();
  vp.sharing = al.sharing;

  std::optional<double> sigma;
  std::string sigma_flag;
  auto sigma_sq = [&]() {
    if (sigma) return *sigma;
    if (variance_factor(vp.n, vp.b) == 0.0) {
      sigma = 0.0;
    } else if (cfg.sigma_sq) {
      sigma = *cfg.sigma_sq;
      sigma_flag = "conditional: sigma^2 supplied";
    } else if (auto s = setup.streaming()) {
      sigma = s->sigma_sq(setup.metric->diag());
    } else {
      std::vector<Vector> probes;
      const auto& it = traces.front().iterates;
      const std::size_t stride = std::max<std::size_t>(1, it.size() / 50);
      for (std::size_t k = 0; k < it.size(); k += stride) probes.push_back(it[k]);
      if (probes.empty()) probes.push_back(setup.x0);
      sigma = estimate_sigma_sq(*setup.objective, *setup.metric, probes);
      sigma_flag = "conditional: sigma^2 is the trajectory maximum";
    }
    return *sigma;
  };
  auto tag_sigma = [&](BoundReport& r) {
    if (!sigma_flag.empty()) r.flags.push_back(sigma_flag);
  };

  // Rate and potential bounds assume eta within the admissible bound and p > 0.
  const bool beyond_bound =
      cfg.stochastic() && (al.p == 0.0 || (ctx.step.bound && ctx.step.eta > *ctx.step.bound));
  auto skipped = [&](const std::string& name) {
    BoundReport r(name, CheckKind::expectation);
    r.flags.push_back(al.p == 0.0 ? "skipped: p = 0 run under override"
                                  : "skipped: eta above the admissible bound (override)");
    r.seeds = traces.size();
    return r;
  };

  for (const auto& name : cfg.checks) {
    if (beyond_bound && (name == "potential" || name == "theorem3" || name == "corollary4")) {
      reports.push_back(skipped(name));
      continue;
    }
    std::vector<BoundReport> per_seed;
    auto each = [&](auto&& fn) {
      for (const auto& t : traces) per_seed.push_back(fn(t));
      reports.push_back(merge(name, per_seed));
    };
    if (name == "descent") {
      each([](const RunTrace& t) { return check_descent(t); });
    } else if (name == "lemma2") {
      const double L = require_L_hat(setup);
      each([&](const RunTrace& t) { return check_lemma2(t, L); });
      tag_L(reports.back());
    } else if (name == "lemma3") {
      each([&](const RunTrace& t) { return check_lemma3(t, reference()); });
    } else if (name == "theorem1") {
      const double L = require_L_hat(setup);
      const double d0 = delta0();
      each([&](const RunTrace& t) { return check_theorem1(t, L, d0, reference().certified); });
      tag_L(reports.back());
    } else if (name == "corollary1") {
      const double L = require_L_hat(setup);
      const double mu = require_mu(setup);
      each([&](const RunTrace& t) {
        return check_corollary1_pl(optimality_gaps(t, *setup.objective, setup.reg, reference()), L, mu);
      });
      tag_L(reports.back());
    } else if (name == "lemma5") {
      each([&](const RunTrace& t) { return check_lemma5(t, vp.eta); });
    } else if (name == "lemma6") {
      const double L = require_L_hat(setup);
      each([&](const RunTrace& t) { return check_lemma6(t, L); });
      tag_L(reports.back());
    } else if (name == "potential") {
      const double L = require_L_hat(setup);
      const bool zero_variance = vp.n && vp.b == *vp.n && vp.bprime == *vp.n;
      if (zero_variance) {
        each([&](const RunTrace& t) { return check_potential_pathwise(t, vp, L, 0.0); });
      } else {
        reports.push_back(check_potential_descent(traces, vp, L, sigma_sq()));
        tag_sigma(reports.back());
      }
      tag_L(reports.back());
    } else if (name == "theorem3") {
      std::vector<double> s_hat;
      for (const auto& t : traces) s_hat.push_back(output_stationarity(t));
      reports.push_back(check_theorem3_rate(s_hat, vp, al.K, sigma_sq(), delta0()));
      tag_sigma(reports.back());
      if (!reference().certified) reports.back().flags.push_back("conditional: delta0 not certified");
      tag_L(reports.back());
    } else if (name == "corollary4") {
      const double mu = require_mu(setup);
      std::vector<double> gaps;
      for (const auto& t : traces) gaps.push_back(t.rows.back().F - reference().F_star);
      reports.push_back(check_corollary4_pl_rate(gaps, vp, al.K, mu, sigma_sq(), delta0()));
      tag_sigma(reports.back());
      if (!reference().certified) reports.back().flags.push_back("conditional: delta0 not certified");
      tag_L(reports.back());
    } else if (name == "arith_cost") {
      const Index d = setup.objective->dim();
      const Index m = full_vector(al.name) ? 1 : setup.objective->partition().num_blocks();
      each([&](const RunTrace& t) { return check_arith_cost(t, vp, d, m); });
      if (vp.p != 0.0 && vp.p != 1.0) reports.back().kind = CheckKind::expectation;
    } else {
      throw Error("unknown check '" + name + "'");
    }
  }
  return reports;
}

bool needs_iterates(const ExperimentConfig& cfg) {
  return has_check(cfg, "corollary1") ||
         (cfg.problem.family != Family::streaming && !cfg.sigma_sq &&
          (has_check(cfg, "potential") || has_check(cfg, "theorem3") || has_check(cfg, "corollary4")));
}

void write_text_file(const fs::path& path, const std::function<void(std::ostream&)>& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  fn(out);
  out.flush();
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::string serialize(const std::map<std::string, std::string>& source) {
  std::string text;
  for (const auto& [k, v] : source) text += k + " = " + v + "\n";
  return text;
}

}  // namespace

const QuadraticFiniteSum* ProblemSetup::quadratic() const {
  return dynamic_cast<const QuadraticFiniteSum*>(objective.get());
}

const StreamingQuadratic* ProblemSetup::streaming() const {
  return dynamic_cast<const StreamingQuadratic*>(objective.get());
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, count);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first) first = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

ProblemSetup build_problem(const ExperimentConfig& cfg) {
  ProblemSetup setup;
  const auto& pr = cfg.problem;
  setup.problem_seed = pr.seed.value_or(cfg.seed_base);
  setup.objective = load_objective(cfg, setup.problem_seed);

  setup.reg = pr.reg;
  if (auto q = setup.quadratic(); q && q->box_recommended() && !cfg.source.count("problem.reg"))
    setup.reg = Regularizer::box(-1.0, 1.0);

  const BlockPartition user_part = setup.objective->partition();
  // Full-vector methods see the whole vector as one block, so the metric and
  // the smoothness constants are those of the single-block problem.
  if (full_vector(cfg.algorithm.name))
    setup.objective = setup.streaming()
                          ? std::make_unique<StreamingQuadratic>(generate_streaming(
                                setup.problem_seed, pr.d, BlockPartition::single(pr.d), pr.condition_number, pr.noise))
                          : repartition(*setup.objective, BlockPartition::single(setup.objective->dim()));
  const BlockPartition& part = setup.objective->partition();
  const Index d = setup.objective->dim();

  switch (cfg.lambda.mode) {
    case LambdaMode::exact_quadratic:
      if (auto q = setup.quadratic()) setup.metric = quadratic_block_metric(*q);
      else if (auto s = setup.streaming()) setup.metric = quadratic_block_metric(*s);
      else throw Error("lambda.mode = exact_quadratic needs a quadratic problem");
      break;
    case LambdaMode::explicit_values: {
      std::vector<double> vals = cfg.lambda.values;
      if (vals.size() == 1) vals.assign(static_cast<std::size_t>(user_part.num_blocks()), vals[0]);
      if (static_cast<Index>(vals.size()) != user_part.num_blocks())
        throw Error("lambda.values needs one value per block (" + std::to_string(user_part.num_blocks()) + ")");
      setup.metric = DiagonalMetric(DiagonalMetric::from_block_scalars(vals, user_part).diag(), part);
      break;
    }
    case LambdaMode::backtracking:
      break;
  }

  if (cfg.smoothness.L_hat && cfg.smoothness.L_tilde) {
    setup.L = LConstants{*cfg.smoothness.L_hat, *cfg.smoothness.L_tilde};
    setup.L_supplied = true;
  } else if (setup.metric) {
    if (auto q = setup.quadratic())
      setup.L = compute_L_constants(exact_Q_list(*q, *setup.metric, cfg.smoothness.q_kind), *setup.metric);
    else if (auto s = setup.streaming())
      setup.L = compute_L_constants(exact_Q_list(*s, *setup.metric), *setup.metric);
  }

  if (cfg.algorithm.mu) {
    setup.mu = *cfg.algorithm.mu;
  } else if (setup.metric && pr.convex) {
    const Matrix* hess = nullptr;
    if (auto q = setup.quadratic()) hess = &q->mean_A();
    else if (auto s = setup.streaming()) hess = &s->A();
    if (hess) {
      const double mu = pl_constant(*hess, *setup.metric);
      if (mu > 0.0) setup.mu = mu;
    }
  }

  setup.x0 = Vector::Zero(d);
  if (pr.x0_scale > 0.0) {
    RngStream rng(setup.problem_seed, "x0");
    for (Index k = 0; k < d; ++k) setup.x0[k] = pr.x0_scale * rng.normal();
  }
  if (setup.reg.kind() == Regularizer::Kind::box)
    setup.x0 = setup.x0.cwiseMax(setup.reg.lo()).cwiseMin(setup.reg.hi());
  return setup;
}

ResolvedStep resolve_step(const ExperimentConfig& cfg, const ProblemSetup& setup) {
  const auto& al = cfg.algorithm;
  ResolvedStep out;
  if (!cfg.stochastic()) {
    out.eta = al.eta.value_or(1.0);
    return out;
  }
  if (setup.L && al.p > 0.0) {
    if (al.step_rule == StepMode::corollary4_pl && !setup.mu)
      throw Error("the PL step rule needs mu; set algorithm.mu");
    out.bound = step_size(*setup.L, al.p, al.b, al.bprime, setup.objective->num_components(),
                          al.step_rule, setup.mu)
                    .eta;
  }
  if (al.eta) out.eta = *al.eta;
  else if (out.bound) out.eta = *out.bound * al.eta_scale;
  else throw Error("eta = auto needs L_hat and L_tilde");
  return out;
}

RunResult run_one(const ExperimentConfig& cfg, const ProblemSetup& setup, std::uint64_t seed,
                  bool record_iterates, std::function<void(const TraceRow&)> on_row) {
  const auto& al = cfg.algorithm;
  const ResolvedStep step = resolve_step(cfg, setup);
  Diagnostics diag;
  diag.record_u = cfg.record_u;
  diag.record_iterates = record_iterates;
  diag.record_wall_time = cfg.record_wall_time;
  diag.on_row = std::move(on_row);
  if (!cfg.stochastic()) {
    PccdConfig pc;
    pc.K = al.K;
    pc.metric = setup.metric;
    pc.backtracking = cfg.lambda.mode == LambdaMode::backtracking;
    pc.backtrack.init = cfg.lambda.init;
    pc.backtrack.growth = cfg.lambda.growth;
    pc.backtrack_reset = cfg.lambda.reset;
    pc.x0 = setup.x0;
    pc.eta = step.eta;
    pc.diagnostics = diag;
    return al.name == AlgoName::pccd ? pccd_run(*setup.objective, setup.reg, pc)
                                     : baseline_prox_gd(*setup.objective, setup.reg, pc);
  }
  VrccdConfig vc;
  vc.K = al.K;
  vc.eta = step.eta;
  vc.p = al.p;
  vc.b = al.b;
  vc.bprime = al.bprime;
  vc.metric = setup.metric;
  vc.x0 = setup.x0;
  vc.sharing = al.sharing;
  vc.seed = seed;
  vc.eta_bound = step.bound;
  vc.eta_override = al.eta_override;
  vc.diagnostics = diag;
  switch (al.name) {
    case AlgoName::page: return baseline_page(*setup.objective, setup.reg, vc);
    case AlgoName::sgd: return baseline_sgd(*setup.objective, setup.reg, vc);
    default: return vrccd_run(*setup.objective, setup.reg, vc);
  }
}

std::vector<std::pair<std::string, std::string>> resolved_parameters(const ExperimentConfig& cfg,
                                                                      const ProblemSetup& setup,
                                                                      std::uint64_t seed) {
  const auto& al = cfg.algorithm;
  const auto& obj = *setup.objective;
  std::vector<std::pair<std::string, std::string>> h;
  auto add = [&](const std::string& k, const std::string& v) { h.emplace_back(k, v); };
  auto u = [](std::uint64_t v) { return std::to_string(v); };
  add("problem.family", obj.family());
  add("problem.n", obj.num_components() ? u(*obj.num_components()) : "inf");
  add("problem.d", std::to_string(obj.dim()));
  std::string sizes;
  for (auto s : obj.partition().sizes()) sizes += (sizes.empty() ? "" : ",") + std::to_string(s);
  add("problem.blocks", sizes);
  add("problem.reg", setup.reg.describe());
  add("problem.seed", u(setup.problem_seed));
  if (!cfg.problem.instance_path.empty()) add("problem.instance", cfg.problem.instance_path);
  add("algorithm.name", to_string(al.name));
  add("algorithm.K", u(al.K));
  const ResolvedStep step = resolve_step(cfg, setup);
  add("algorithm.eta", num(step.eta));
  if (step.bound) add("algorithm.eta_bound", num(*step.bound));
  if (cfg.stochastic()) {
    add("algorithm.p", num(al.p));
    add("algorithm.b", u(al.b));
    add("algorithm.bprime", u(al.bprime));
    add("algorithm.sample_sharing",
        al.sharing == SampleSharing::fresh_per_block ? "fresh_per_block" : "shared_per_cycle");
    add("algorithm.step_rule", al.step_rule == StepMode::theorem3 ? "theorem3" : "corollary4_pl");
  }
  const char* modes[] = {"exact_quadratic", "backtracking", "explicit"};
  add("lambda.mode", modes[static_cast<int>(cfg.lambda.mode)]);
  if (setup.metric) {
    std::string diag;
    for (Index j = 0; j < obj.partition().num_blocks(); ++j)
      diag += (j ? "," : "") + num(setup.metric->diag()[obj.partition().offset(j)]);
    add("lambda.block_values", diag);
  }
  if (setup.L) {
    add("smoothness.L_hat", num(setup.L->L_hat));
    add("smoothness.L_tilde", num(setup.L->L_tilde));
    add("smoothness.source", setup.L_supplied ? "supplied" : "computed");
  }
  if (setup.mu) add("algorithm.mu", num(*setup.mu));
  add("seed", u(seed));
  add("diagnostics.record_u", cfg.record_u ? "true" : "false");
  return h;
}

void write_trace_header(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& header) {
  for (const auto& [k, v] : header) os << "# " << k << " = " << v << '\n';
  os << "k,F,s_k,v_k,u_k,grad_component_evals,wall_ns\n";
}

void write_trace_row(std::ostream& os, const TraceRow& r) {
  os << r.k << ',' << num(r.F) << ',' << num(r.s) << ',' << (r.k == 0 ? "" : num(r.v)) << ','
     << num(r.u) << ',' << r.grad_component_evals << ',';
  if (r.wall_ns >= 0) os << r.wall_ns;
  os << '\n';
}

void write_trace_csv(std::ostream& os, const RunTrace& trace,
                     const std::vector<std::pair<std::string, std::string>>& header) {
  write_trace_header(os, header);
  for (const auto& r : trace.rows) write_trace_row(os, r);
}

ExperimentOutcome run_experiment(ExperimentConfig cfg, const RunOptions& opts) {
  if (opts.seed) {
    cfg.seed_base = *opts.seed;
  }
  const ProblemSetup setup = build_problem(cfg);
  const ResolvedStep step = resolve_step(cfg, setup);
  const fs::path out_dir(opts.out_dir);
  if (opts.write_files) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error("cannot create output directory '" + out_dir.string() + "': " + ec.message());
  }
  const bool keep_iterates = needs_iterates(cfg);

  ExperimentOutcome out;
  std::mutex files_mu;
  auto run_batch = [&](std::size_t count) {
    std::vector<RunTrace> traces(count);
    parallel_for(count, opts.jobs, [&](std::size_t s) {
      const std::uint64_t seed = cfg.seed_base + s;
      const bool iterates = keep_iterates && (s == 0 || has_check(cfg, "corollary1"));
      if (!opts.write_files) {
        traces[s] = run_one(cfg, setup, seed, iterates).trace;
        return;
      }
      const fs::path path = out_dir / trace_file_name(cfg.trace_path, seed, count);
      std::ofstream os(path, std::ios::binary);
      if (!os) throw Error("cannot write '" + path.string() + "'");
      write_trace_header(os, resolved_parameters(cfg, setup, seed));
      RunResult res = run_one(cfg, setup, seed, iterates, [&os](const TraceRow& r) { write_trace_row(os, r); });
      os.flush();
      if (!os) throw Error("cannot write '" + path.string() + "'");
      {
        std::lock_guard<std::mutex> lock(files_mu);
        out.files.push_back(path.string());
      }
      traces[s] = std::move(res.trace);
    });
    return traces;
  };

  CheckContext ctx{cfg, setup, step};
  out.traces = run_batch(cfg.seed_count);
  out.reports = evaluate_checks(ctx, out.traces);

  auto soft_failed = [](const std::vector<BoundReport>& reps) {
    return std::any_of(reps.begin(), reps.end(), [](const BoundReport& r) { return !r.pass && !is_hard(r); });
  };
  if (soft_failed(out.reports)) {
    out.escalated = true;
    out.files.clear();
    out.traces = run_batch(cfg.seed_count * 4);
    out.reports = evaluate_checks(ctx, out.traces);
    for (auto& r : out.reports)
      if (!is_hard(r)) r.flags.push_back("escalated to " + std::to_string(cfg.seed_count * 4) + " seeds");
  }
  std::sort(out.files.begin(), out.files.end());

  const bool hard_fail =
      std::any_of(out.reports.begin(), out.reports.end(), [](const BoundReport& r) { return !r.pass && is_hard(r); });
  out.exit_code = hard_fail ? exit_hard_fail : soft_failed(out.reports) ? exit_soft_fail : exit_ok;

  if (opts.write_files && !cfg.checks.empty()) {
    const fs::path txt = out_dir / cfg.report_path;
    fs::path csv = txt;
    csv.replace_extension(".csv");
    if (csv == txt) csv += ".csv";
    write_text_file(txt, [&](std::ostream& os) {
      for (const auto& [k, v] : resolved_parameters(cfg, setup, cfg.seed_base)) os << "# " << k << " = " << v << '\n';
      write_report_text(os, out.reports);
      os << "exit_status = " << out.exit_code << '\n';
    });
    write_text_file(csv, [&](std::ostream& os) { write_report_csv(os, out.reports); });
    out.files.push_back(txt.string());
    out.files.push_back(csv.string());
  }
  return out;
}

std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::string& axis,
                            const std::vector<std::string>& values, const RunOptions& opts) {
  if (!is_numeric_key(axis)) throw Error("sweep axis '" + axis + "' is not a numeric config key");
  if (values.empty()) throw Error("sweep needs at least one value");
  std::map<std::string, std::string> base_source = cfg.source;
  if (opts.seed) base_source["seeds.base"] = std::to_string(*opts.seed);
  const std::string text = serialize(base_source);

  std::vector<ExperimentConfig> cfgs;
  std::vector<std::unique_ptr<ProblemSetup>> setups;
  for (const auto& v : values) {
    cfgs.push_back(parse_config(text, {{axis, v}}));
    setups.push_back(std::make_unique<ProblemSetup>(build_problem(cfgs.back())));
  }
  const std::size_t S = cfg.seed_count;
  std::vector<SweepRow> rows(values.size() * S);
  parallel_for(rows.size(), opts.jobs, [&](std::size_t i) {
    const std::size_t vi = i / S, s = i % S;
    const auto& c = cfgs[vi];
    const std::uint64_t seed = c.seed_base + s;
    const RunResult res = run_one(c, *setups[vi], seed);
    const auto& last = res.trace.rows.back();
    rows[i] = {values[vi], seed, last.F, last.s, last.work};
  });
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::string& axis, const std::vector<SweepRow>& rows) {
  os << "axis,value,seed,final_F,final_s,total_work\n";
  for (const auto& r : rows)
    os << axis << ',' << r.value << ',' << r.seed << ',' << num(r.final_F) << ',' << num(r.final_s) << ','
       << num(r.total_work) << '\n';
}

}  // namespace bcd
