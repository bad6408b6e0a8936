#include "blockcd/algorithms.hpp"
#include "blockcd/problems.hpp"
#include "blockcd/smoothness.hpp"
#include "blockcd/theory_check.hpp"

#include <doctest.h>

#include <sstream>

using namespace bcd;

namespace {

RunTrace fake_trace(const std::vector<double>& F, const std::vector<double>& v, const std::vector<double>& s) {
  RunTrace t;
  for (std::size_t k = 0; k < F.size(); ++k) {
    TraceRow r;
    r.k = k;
    r.F = F[k];
    r.v = v[k];
    r.s = s[k];
    t.rows.push_back(r);
  }
  return t;
}

struct QuadCase {
  QuadraticFiniteSum prob;
  DiagonalMetric metric;
  LConstants L;
};

QuadCase quad_case(std::uint64_t seed, Index d, Index m) {
  const auto part = BlockPartition::uniform(d, m);
  auto q = generate_quadratic(seed, 8, d, part, 10.0, true);
  auto metric = quadratic_block_metric(q);
  const auto L = compute_L_constants(exact_Q_list(q, metric, QKind::mean_function), metric);
  return {std::move(q), std::move(metric), L};
}

}  // namespace

TEST_SUITE("theory_check") {

TEST_CASE("verdict tolerance") {
  CHECK(abs_tol(0.5) == 1e-9);
  CHECK(abs_tol(-3e3) == doctest::Approx(3e-6));
  BoundReport r("x");
  r.add(1, 1.0 + 0.5e-9, 1.0);
  CHECK(r.pass);
  r.add(2, 1.0 + 2e-9, 1.0);
  CHECK_FALSE(r.pass);
  CHECK(r.violations() == 1);
  CHECK(r.worst_slack() == doctest::Approx(-2e-9));
}

TEST_CASE("descent check catches a violation") {
  const auto good = fake_trace({3.0, 2.0, 1.5}, {0.0, 2.0, 1.0}, {NAN, 0.1, 0.1});
  CHECK(check_descent(good).pass);
  const auto bad = fake_trace({3.0, 2.5, 1.5}, {0.0, 2.0, 1.0}, {NAN, 0.1, 0.1});
  const auto rep = check_descent(bad);
  CHECK_FALSE(rep.pass);
  CHECK(rep.violations() == 1);
  CHECK_FALSE(rep.rows[0].pass);
}

TEST_CASE("deterministic bounds on a P-CCD run") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto c = quad_case(seed, 12, 3);
    PccdConfig pc;
    pc.K = 60;
    pc.metric = c.metric;
    pc.x0 = Vector::Constant(12, 2.0);
    const auto reg = Regularizer::zero();
    const auto res = pccd_run(c.prob, reg, pc);
    const auto ref = reference_exact_quadratic(c.prob);
    const double d0 = ref.gap(c.prob, reg, pc.x0);
    CHECK(check_descent(res.trace).pass);
    CHECK(check_lemma2(res.trace, c.L.L_hat).pass);
    CHECK(check_lemma3(res.trace, ref).pass);
    CHECK(check_theorem1(res.trace, c.L.L_hat, d0).pass);
    const double mu = pl_constant(c.prob.mean_A(), c.metric);
    CHECK(check_corollary1_pl(optimality_gaps(res.trace, c.prob, reg, ref), c.L.L_hat, mu).pass);
  }
}

TEST_CASE("start at the minimizer gives zero lhs") {
  auto c = quad_case(3, 10, 2);
  PccdConfig pc;
  pc.K = 5;
  pc.metric = c.metric;
  pc.x0 = *c.prob.minimizer();
  const auto res = pccd_run(c.prob, Regularizer::zero(), pc);
  const auto rep = check_theorem1(res.trace, c.L.L_hat, 0.0);
  CHECK(rep.pass);
  for (const auto& r : rep.rows) CHECK(r.lhs <= 1e-25);
}

TEST_CASE("identity quadratic reaches the optimum in one cycle") {
  const auto part = BlockPartition::uniform(6, 6);
  Vector b(6);
  b << 1, -2, 3, 0.5, -1, 2;
  QuadraticFiniteSum q({Matrix::Identity(6, 6)}, {b}, {0.0}, part);
  const auto metric = DiagonalMetric::identity(part);
  PccdConfig pc;
  pc.K = 3;
  pc.metric = metric;
  pc.x0 = Vector::Zero(6);
  pc.diagnostics.record_iterates = true;
  const auto res = pccd_run(q, Regularizer::zero(), pc);
  const auto gaps = optimality_gaps(res.trace, q, Regularizer::zero(), reference_exact_quadratic(q));
  CHECK(gaps[1] == 0.0);
  const auto L = compute_L_constants(exact_Q_list(q, metric), metric);
  CHECK(L.L_hat == doctest::Approx(1.0));
  CHECK(check_corollary1_pl(gaps, L.L_hat, 1.0).pass);
  CHECK_THROWS(check_corollary1_pl(gaps, L.L_hat, 0.0));
  CHECK_THROWS(check_corollary1_pl(gaps, L.L_hat, -1.0));
}

TEST_CASE("stochastic rate rhs with a full batch") {
  VrParams vp;
  vp.eta = 0.25;
  vp.p = 0.1;
  vp.b = 16;
  vp.bprime = 4;
  vp.n = 16;
  const std::vector<double> s(40, 0.25);
  const auto rep = check_theorem3_rate(s, vp, 100, 123.0, 2.0);
  REQUIRE(rep.rows.size() == 1);
  // sigma terms carry n - b = 0 and identical samples give no allowance
  CHECK(rep.rows[0].rhs == 4.0 * 2.0 / (0.25 * 100));
  CHECK(rep.pass);
  const auto few = check_theorem3_rate({0.01, 0.02}, vp, 100, 0.0, 2.0);
  CHECK(std::find(few.flags.begin(), few.flags.end(), "low-power") != few.flags.end());
}

TEST_CASE("stochastic rate rhs with a minibatch") {
  VrParams vp;
  vp.eta = 0.5;
  vp.p = 0.2;
  vp.b = 4;
  vp.bprime = 2;
  vp.n = 10;
  const auto rep = check_theorem3_rate(std::vector<double>(30, 0.0), vp, 50, 3.0, 1.0);
  const double vf = 6.0 / (4.0 * 9.0);
  const double rhs = 4.0 / (0.5 * 50) + 2 * 0.8 * 6 * 3.0 / (0.2 * 4 * 9 * 50) + 4 * vf * 3.0;
  CHECK(rep.rows[0].rhs == doctest::Approx(rhs).epsilon(1e-14));
}

TEST_CASE("PL rate rhs") {
  VrParams vp;
  vp.eta = 0.1;
  vp.p = 0.5;
  vp.b = 5;
  vp.bprime = 1;
  vp.n = 5;
  const auto rep = check_corollary4_pl_rate(std::vector<double>(30, 0.0), vp, 20, 0.4, 9.0, 3.0);
  CHECK(rep.rows[0].rhs == doctest::Approx(std::pow(1.02, -20.0) * 3.0).epsilon(1e-14));
  CHECK_THROWS(check_corollary4_pl_rate({0.0}, vp, 20, 0.0, 9.0, 3.0));
}

TEST_CASE("mean and confidence allowance") {
  const auto ci = mean_ci({1.0, 2.0, 3.0, 4.0});
  CHECK(ci.mean == 2.5);
  CHECK(ci.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(ci.allowance == doctest::Approx(kZ99 * std::sqrt(5.0 / 3.0) / 2.0));
}

TEST_CASE("arithmetic cost of the balanced switch") {
  // p = b'/(b + b') makes p b + (1 - p) b' = 2 b b' / (b + b')
  const double b = 64, bp = 8, p = bp / (b + bp);
  CHECK(p * b + (1 - p) * bp == doctest::Approx(1024.0 / 72.0).epsilon(1e-14));
  CHECK(1024.0 / 72.0 == doctest::Approx(14.22).epsilon(1e-3));

  const auto part = BlockPartition::uniform(4, 2);
  const auto q = generate_quadratic(2, 64, 4, part, 3.0, true);
  VrccdConfig vc;
  vc.K = 10000;
  vc.eta = 0.05;
  vc.p = p;
  vc.b = 64;
  vc.bprime = 8;
  vc.metric = quadratic_block_metric(q);
  vc.x0 = Vector::Zero(4);
  vc.seed = 4;
  vc.sharing = SampleSharing::shared_per_cycle;
  const auto res = vrccd_run(q, Regularizer::zero(), vc);
  const double per_cycle = (res.trace.rows.back().work - res.trace.rows.front().work) / 10000.0;
  CHECK(std::abs(per_cycle / (1024.0 / 72.0 * 4) - 1.0) < 0.02);
  VrParams vp{0.05, p, 64, 8, 64, SampleSharing::shared_per_cycle};
  CHECK(check_arith_cost(res.trace, vp, 4, 2).pass);
}

TEST_CASE("arithmetic cost is exact at p = 1") {
  const auto part = BlockPartition::uniform(6, 3);
  const auto q = generate_quadratic(2, 20, 6, part, 3.0, true);
  VrccdConfig vc;
  vc.K = 50;
  vc.eta = 0.05;
  vc.p = 1.0;
  vc.b = 8;
  vc.bprime = 2;
  vc.metric = quadratic_block_metric(q);
  vc.x0 = Vector::Zero(6);
  const auto res = vrccd_run(q, Regularizer::zero(), vc);
  CHECK(res.trace.rows[50].work - res.trace.rows[0].work == 50.0 * 8 * 6);
  VrParams vp{0.05, 1.0, 8, 2, 20, SampleSharing::fresh_per_block};
  const auto rep = check_arith_cost(res.trace, vp, 6, 3);
  CHECK(rep.pass);
  CHECK(rep.rows[0].lhs == 0.0);
}

TEST_CASE("pathwise potential with exact batches") {
  auto c = quad_case(7, 8, 4);
  VrccdConfig vc;
  vc.K = 80;
  vc.p = 0.4;
  vc.b = vc.bprime = 8;
  const auto plan = step_size(c.L, vc.p, 8, 8, 8, StepMode::theorem3);
  vc.eta = plan.eta;
  vc.metric = c.metric;
  vc.x0 = Vector::Ones(8);
  vc.seed = 1;
  vc.diagnostics.record_u = true;
  const auto res = vrccd_run(c.prob, Regularizer::zero(), vc);
  VrParams vp{plan.eta, 0.4, 8, 8, 8, SampleSharing::fresh_per_block};
  CHECK(check_potential_pathwise(res.trace, vp, c.L.L_hat, 0.0).pass);
  CHECK(check_lemma5(res.trace, plan.eta).pass);
  CHECK(check_lemma6(res.trace, c.L.L_hat).pass);
  // needs u recorded
  vc.diagnostics.record_u = false;
  const auto plain = vrccd_run(c.prob, Regularizer::zero(), vc);
  CHECK_THROWS(check_lemma5(plain.trace, plan.eta));
}

TEST_CASE("report serialization") {
  BoundReport r("theorem1");
  r.add(1, 0.5, 1.0);
  r.flags.push_back("conditional: delta0 not certified");
  std::ostringstream csv, txt;
  write_report_csv(csv, {r});
  CHECK(csv.str().rfind("bound_name,k,lhs,rhs,slack,verdict\n", 0) == 0);
  CHECK(csv.str().find("theorem1,1,0.5,1,0.5,pass") != std::string::npos);
  write_report_text(txt, {r});
  CHECK(txt.str().find("theorem1: PASS") != std::string::npos);
  CHECK(txt.str().find("[conditional: delta0 not certified]") != std::string::npos);
  CHECK(r.conditional());
}

TEST_CASE("uncertified reference solve") {
  const auto part = BlockPartition::uniform(4, 2);
  const auto q = generate_quadratic(5, 6, 4, part, 4.0, true);
  const auto metric = quadratic_block_metric(q);
  const auto exact = reference_exact_quadratic(q);
  const double mu = pl_constant(q.mean_A(), metric);
  const auto cert = reference_solve(q, Regularizer::zero(), metric, mu, Vector::Zero(4));
  CHECK(cert.certified);
  CHECK(cert.F_star <= exact.F_star + 1e-12);
  CHECK(cert.F_star >= exact.F_star - 1e-9);
  const auto best = reference_solve(q, Regularizer::zero(), metric, std::nullopt, Vector::Zero(4));
  CHECK_FALSE(best.certified);
  const auto rep = check_lemma3(fake_trace({1.0, 0.5}, {0.0, 0.1}, {NAN, 0.0}), best);
  CHECK(rep.conditional());
}

}
