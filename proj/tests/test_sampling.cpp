#include "blockcd/problems.hpp"
#include "blockcd/sampling.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

using namespace bcd;

TEST_SUITE("sampling") {

TEST_CASE("full batch returns every index") {
  RngStream rng(1, "batch");
  auto b = draw_minibatch(rng, 9, 9);
  std::sort(b.begin(), b.end());
  for (std::uint64_t i = 0; i < 9; ++i) CHECK(b[i] == i);
  CHECK_THROWS(draw_minibatch(rng, 5, 6));
  CHECK_THROWS(draw_minibatch(rng, 5, 0));
}

TEST_CASE("minibatches are distinct and in range") {
  RngStream rng(2, "batch");
  for (int t = 0; t < 200; ++t) {
    const auto b = draw_minibatch(rng, 20, 7);
    const std::set<ComponentId> s(b.begin(), b.end());
    CHECK(s.size() == 7);
    CHECK(*s.rbegin() < 20);
  }
}

TEST_CASE("single draws are uniform (chi-square, 7 dof)") {
  RngStream rng(5, "batch");
  const int N = 80000;
  std::vector<int> counts(8, 0);
  for (int t = 0; t < N; ++t) ++counts[draw_minibatch(rng, 8, 1)[0]];
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - N / 8.0) * (c - N / 8.0) / (N / 8.0);
  CHECK(chi2 < 24.32);  // 0.999 quantile
}

TEST_CASE("3-subsets of 6 are uniform (chi-square, 19 dof)") {
  RngStream rng(6, "batch");
  const int N = 40000;
  std::map<std::vector<ComponentId>, int> counts;
  for (int t = 0; t < N; ++t) {
    auto b = draw_minibatch(rng, 6, 3);
    std::sort(b.begin(), b.end());
    ++counts[b];
  }
  CHECK(counts.size() == 20);
  double chi2 = 0.0;
  for (const auto& [k, c] : counts) chi2 += (c - N / 20.0) * (c - N / 20.0) / (N / 20.0);
  CHECK(chi2 < 43.82);
}

TEST_CASE("Bernoulli switch frequency") {
  RngStream rng(7, "switch");
  const int N = 100000;
  int hits = 0;
  for (int t = 0; t < N; ++t) hits += bernoulli_switch(rng, 0.25) == Branch::full_batch;
  const double sd = std::sqrt(0.25 * 0.75 / N);
  CHECK(std::abs(hits / double(N) - 0.25) < 5 * sd);
  RngStream a(7, "switch");
  for (int t = 0; t < 100; ++t) CHECK(bernoulli_switch(a, 1.0) == Branch::full_batch);
  for (int t = 0; t < 100; ++t) CHECK(bernoulli_switch(a, 0.0) == Branch::recursive);
  CHECK_THROWS(bernoulli_switch(a, 1.5));
}

TEST_CASE("variance factor") {
  CHECK(variance_factor(5, 2) == doctest::Approx(3.0 / 8.0).epsilon(1e-15));
  CHECK(variance_factor(7, 7) == 0.0);
  CHECK(variance_factor(7, 1) == 1.0);
  CHECK(variance_factor(std::nullopt, 4) == 0.25);
  CHECK(variance_factor(1, 1) == 0.0);
}

TEST_CASE("streams are reproducible and independent") {
  RngStream a(42, "switch"), b(42, "switch"), c(42, "batch"), d(43, "switch");
  std::vector<std::uint64_t> va, vb, vc, vd;
  for (int i = 0; i < 16; ++i) {
    va.push_back(a.next());
    vb.push_back(b.next());
    vc.push_back(c.next());
    vd.push_back(d.next());
  }
  CHECK(va == vb);
  CHECK(va != vc);
  CHECK(va != vd);
  // consuming another stream leaves this one untouched
  RngStream s1(9, "switch"), s2(9, "switch"), other(9, "batch");
  for (int i = 0; i < 1000; ++i) other.next();
  CHECK(s1.next() == s2.next());
}

TEST_CASE("without-replacement variance identity, n = 6, b = 3") {
  const auto part = BlockPartition::uniform(5, 2);
  const auto prob = generate_quadratic(17, 6, 5, part, 5.0, true);
  const auto metric = quadratic_block_metric(prob);
  Vector x(5);
  x << 0.3, -1.0, 0.5, 2.0, -0.7;
  for (Index j = 0; j < 2; ++j) {
    // independent enumeration with explicit nested loops
    const Vector g = prob.block_grad(j, x);
    const Vector lam = metric.block(j);
    std::vector<Vector> comp;
    for (ComponentId i = 0; i < 6; ++i) comp.push_back(prob.component_block_grad(i, j, x));
    double lhs = 0.0;
    int count = 0;
    for (int a = 0; a < 6; ++a)
      for (int b = a + 1; b < 6; ++b)
        for (int c = b + 1; c < 6; ++c) {
          const Vector e = (comp[a] + comp[b] + comp[c]) / 3.0 - g;
          lhs += (e.array().square() / lam.array()).sum();
          ++count;
        }
    lhs /= count;
    double var = 0.0;
    for (const auto& ci : comp) var += ((ci - g).array().square() / lam.array()).sum();
    var /= 6.0;
    const double rhs = (6.0 - 3.0) / (3.0 * 5.0) * var;
    CHECK(count == 20);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * rhs);

    const auto r = lemma1_enumeration_check(prob, metric, x, j, 3);
    CHECK(std::abs(r.lhs - lhs) <= 1e-12 * lhs);
    CHECK(std::abs(r.rhs - rhs) <= 1e-12 * rhs);
  }
}

}
