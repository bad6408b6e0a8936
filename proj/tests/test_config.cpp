#include "blockcd/config.hpp"

#include <doctest.h>

#include <algorithm>

using namespace bcd;

namespace {

// Every issue message, for substring checks.
std::vector<ConfigIssue> issues_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.issues();
  }
  return {};
}

bool mentions(const std::vector<ConfigIssue>& issues, const std::string& what, int line = -1) {
  return std::any_of(issues.begin(), issues.end(), [&](const ConfigIssue& i) {
    return i.message.find(what) != std::string::npos && (line < 0 || i.line == line);
  });
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("minimal deterministic config") {
  const auto cfg = parse_config("algorithm.name = pccd\n");
  CHECK(cfg.algorithm.name == AlgoName::pccd);
  CHECK_FALSE(cfg.algorithm.eta.has_value());  // resolved to 1 at run time
  CHECK_FALSE(cfg.stochastic());
  CHECK(cfg.cyclic());
  CHECK(cfg.problem.family == Family::quadratic);
  CHECK(cfg.problem.reg.kind() == Regularizer::Kind::zero);
}

TEST_CASE("comments, blank lines and regularizer syntax") {
  const auto cfg = parse_config(
      "# header\n"
      "\n"
      "problem.family = quadratic   # trailing comment\n"
      "problem.reg = l1(0.25)\n"
      "problem.blocks = [2, 3, 5]\n"
      "problem.d = 10\n"
      "algorithm.name = vrccd\n"
      "algorithm.p = 0.5\n"
      "algorithm.b = 4\n"
      "algorithm.bprime = 2\n"
      "diagnostics.checks = lemma5, lemma6\n"
      "diagnostics.record_u = true\n");
  CHECK(cfg.problem.reg.kind() == Regularizer::Kind::l1);
  CHECK(cfg.problem.reg.weight() == 0.25);
  CHECK(cfg.problem.blocks == std::vector<Index>{2, 3, 5});
  CHECK(cfg.problem.m == 3);
  CHECK(cfg.checks == std::vector<std::string>{"lemma5", "lemma6"});
  const auto box = parse_config("problem.reg = box(-2, 0.5)\n");
  CHECK(box.problem.reg.lo() == -2.0);
  CHECK(box.problem.reg.hi() == 0.5);
}

TEST_CASE("nonconvex quadratic defaults to a box") {
  const auto cfg = parse_config("problem.convex = false\n");
  CHECK(cfg.problem.reg.kind() == Regularizer::Kind::box);
}

TEST_CASE("p outside (0,1] names the interval") {
  const auto is = issues_of("algorithm.name = vrccd\nalgorithm.p = 1.5\n");
  REQUIRE_FALSE(is.empty());
  CHECK(mentions(is, "(0,1]"));
}

TEST_CASE("p = 0 needs the override and an explicit eta") {
  CHECK(mentions(issues_of("algorithm.name = vrccd\nalgorithm.p = 0\n"), "(0,1]"));
  CHECK(mentions(issues_of("algorithm.name = vrccd\nalgorithm.p = 0\nalgorithm.eta_override = true\n"),
                 "explicit eta"));
  CHECK_NOTHROW(parse_config("algorithm.name = vrccd\nalgorithm.p = 0\nalgorithm.eta_override = true\nalgorithm.eta = 0.01\n"));
}

TEST_CASE("finite-sum schedule expansion") {
  const auto cfg = parse_config("problem.n = 256\nalgorithm.name = vrccd\nalgorithm.schedule = finite_sum\n");
  CHECK(cfg.algorithm.b == 256);
  CHECK(cfg.algorithm.bprime == 16);
  CHECK(cfg.algorithm.p == doctest::Approx(16.0 / 272.0).epsilon(1e-15));
  CHECK(mentions(issues_of("problem.n = 256\nalgorithm.name = vrccd\nalgorithm.schedule = finite_sum\nalgorithm.p = 0.3\n"),
                 "finite_sum"));
}

TEST_CASE("variant forcing") {
  CHECK(parse_config("algorithm.name = sccd\nalgorithm.b = 4\n").algorithm.p == 1.0);
  CHECK(mentions(issues_of("algorithm.name = sgd\nalgorithm.p = 0.5\n"), "forces p = 1"));
  CHECK(parse_config("algorithm.name = vroccd\n").algorithm.sharing == SampleSharing::shared_per_cycle);
}

TEST_CASE("all errors are reported together with line numbers") {
  const auto is = issues_of(
      "algorithm.name = vrccd\n"   // 1
      "bogus.key = 3\n"            // 2
      "algorithm.K = -4\n"         // 3
      "algorithm.bprime = 9\n"     // 4
      "algorithm.b = 3\n"          // 5
      "problem.reg = l2(1)\n"      // 6
      "algorithm.K = 5\n");        // 7 duplicate
  CHECK(mentions(is, "bogus.key", 2));
  CHECK(mentions(is, "", 3));
  CHECK(mentions(is, "b'", 4));
  CHECK(mentions(is, "", 6));
  CHECK(mentions(is, "duplicate", 7));
  CHECK(is.size() >= 5);
  for (std::size_t i = 1; i < is.size(); ++i) CHECK(is[i - 1].line <= is[i].line);
  try {
    parse_config("bogus.key = 3\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
}

TEST_CASE("cross-field rules") {
  CHECK(mentions(issues_of("algorithm.name = pccd\nalgorithm.b = 3\n"), "stochastic"));
  CHECK_FALSE(issues_of("problem.family = sigmoid\n").empty());  // exact metric needs a quadratic
  CHECK_NOTHROW(parse_config("problem.family = sigmoid\nlambda.mode = backtracking\n"));
  CHECK_FALSE(issues_of("algorithm.name = vrccd\nlambda.mode = backtracking\nproblem.family = sigmoid\n").empty());
  CHECK_FALSE(issues_of("problem.family = streaming\nproblem.n = 10\nalgorithm.name = vrccd\n").empty());
  CHECK_FALSE(issues_of("problem.family = streaming\nalgorithm.name = pccd\n").empty());
  CHECK_FALSE(issues_of("problem.d = 4\nproblem.m = 5\n").empty());
  CHECK_FALSE(issues_of("problem.d = 4\nproblem.blocks = 1,2\n").empty());
  CHECK_FALSE(issues_of("diagnostics.checks = theorem9\n").empty());
  CHECK_FALSE(issues_of("algorithm.name = pccd\ndiagnostics.checks = theorem3\n").empty());
  CHECK_FALSE(issues_of("algorithm.name = vrccd\ndiagnostics.checks = lemma5\n").empty());
  CHECK_FALSE(issues_of("problem.d = 4\nproblem.m = 2\nlambda.mode = explicit\nlambda.values = 1, 2, 3\n").empty());
  CHECK_NOTHROW(parse_config("problem.d = 4\nproblem.m = 2\nlambda.mode = explicit\nlambda.values = 1, 2\n"));
}

TEST_CASE("overrides replace file values") {
  const auto cfg = parse_config("algorithm.K = 10\n", {{"algorithm.K", "25"}, {"seeds.base", "7"}});
  CHECK(cfg.algorithm.K == 25);
  CHECK(cfg.seed_base == 7);
  CHECK(cfg.source.at("algorithm.K") == "25");
  CHECK_THROWS_AS(parse_config("", {{"nope.key", "1"}}), ConfigError);
}

TEST_CASE("numeric keys") {
  CHECK(is_numeric_key("algorithm.p"));
  CHECK(is_numeric_key("algorithm.eta"));
  CHECK(is_numeric_key("problem.m"));
  CHECK_FALSE(is_numeric_key("algorithm.name"));
  CHECK_FALSE(is_numeric_key("problem.reg"));
  CHECK_FALSE(is_numeric_key("nothing"));
}

TEST_CASE("missing file") {
  CHECK_THROWS(parse_config_file("/nonexistent/config.cfg"));
}

}
