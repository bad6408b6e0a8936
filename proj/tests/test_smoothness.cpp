#include "blockcd/error.hpp"
#include "blockcd/problems.hpp"
#include "blockcd/smoothness.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace bcd;

TEST_SUITE("smoothness") {

TEST_CASE("spectral norm basics") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 1.0;
  CHECK(spectral_norm(d) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(spectral_norm(Matrix::Zero(4, 4)) == 0.0);
}

TEST_CASE("spectral norm matches a dense eigensolver") {
  std::mt19937_64 g(12);
  for (int t = 0; t < 30; ++t) {
    const Matrix m = testutil::random_psd(6, g);
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    const double top = es.eigenvalues().maxCoeff();
    CHECK(std::abs(spectral_norm(m) - top) <= 1e-8 * top);
  }
}

TEST_CASE("spectral norm reports non-convergence") {
  std::mt19937_64 g(2);
  const Matrix m = testutil::random_psd(30, g);
  CHECK_THROWS_AS(spectral_norm(m, 1e-14, 2), ConvergenceError);
}

TEST_CASE("L constants for scaled identities on singleton blocks") {
  for (Index m : {1, 2, 5}) {
    const double L = 3.0;
    const auto part = BlockPartition::uniform(m, m);
    const auto metric = DiagonalMetric(Vector::Constant(m, L), part);
    std::vector<SymmetricMatrix> q(m, SymmetricMatrix(Matrix(L * Matrix::Identity(m, m))));
    const auto c = compute_L_constants(q, metric);
    CHECK(c.L_hat == doctest::Approx(double(m)).epsilon(1e-10));
    CHECK(c.L_tilde == doctest::Approx(double(m - 1)).epsilon(1e-10));
    std::vector<SymmetricMatrix> zero(m, SymmetricMatrix::zero(m));
    const auto z = compute_L_constants(zero, metric);
    CHECK(z.L_hat == 0.0);
    CHECK(z.L_tilde == 0.0);
  }
}

TEST_CASE("step size root") {
  const double eta = eta_from_c0(2.0);
  CHECK(eta == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(2.0 * eta * eta + eta - 1.0 <= 0.0);
  CHECK(eta_from_c0(0.0) == 1.0);
  for (double c0 : {1e-9, 0.3, 7.0, 1e4, 1e9}) {
    const double e = eta_from_c0(c0);
    CHECK(c0 * e * e + e - 1.0 <= 0.0);
    CHECK(e > 0.0);
    // and it is the root, not just below it
    CHECK(c0 * e * e + e - 1.0 > -1e-12);
  }
}

TEST_CASE("finite-sum schedule collapses c0") {
  const LConstants L{1.7, 0.9};
  const std::uint64_t n = 256, b = 256, bp = 16;
  const double p = double(bp) / double(b + bp);
  CHECK(theorem3_c0(L, p, b, bp, n) == doctest::Approx(3 * 1.7 + 2 * 0.9).epsilon(1e-13));
  const auto plan = step_size(L, p, b, bp, n, StepMode::theorem3);
  CHECK(plan.eta == eta_from_c0(plan.c0));
  CHECK_THROWS(step_size(L, 0.0, b, bp, n, StepMode::theorem3));
}

TEST_CASE("c0 formulas against direct evaluation") {
  const LConstants L{2.0, 1.5};
  const double p = 0.3;
  const std::uint64_t b = 8, bp = 3, n = 40;
  const double vf = double(n - b) / (double(b) * (n - 1));
  const double t3 = 2 * (1 - p) * L.L_hat / (p * bp) + L.L_hat + 2 * (p * vf + (1 - p) / bp) * L.L_tilde / p;
  CHECK(theorem3_c0(L, p, b, bp, n) == doctest::Approx(t3).epsilon(1e-14));
  const double c4 = L.L_hat + 4 * L.L_hat / (p * bp) + (4 * L.L_tilde / p) * (p * vf + (1 - p) / bp);
  CHECK(corollary4_c0(L, p, b, bp, n) == doctest::Approx(c4).epsilon(1e-14));
  // streaming: variance factor 1/b
  const double ts = 2 * (1 - p) * L.L_hat / (p * bp) + L.L_hat + 2 * (p / b + (1 - p) / bp) * L.L_tilde / p;
  CHECK(theorem3_c0(L, p, b, bp, std::nullopt) == doctest::Approx(ts).epsilon(1e-14));
  // PL mode caps eta at p / (mu (1 - p))
  const auto pl = step_size(L, p, b, bp, n, StepMode::corollary4_pl, 1e3);
  CHECK(pl.eta <= p / (1e3 * (1 - p)));
  CHECK_THROWS(step_size(L, p, b, bp, n, StepMode::corollary4_pl));
}

TEST_CASE("backtracking brackets the curvature") {
  const auto part = BlockPartition::uniform(4, 2);
  for (double L : {0.3, 1.0, 3.0, 100.0}) {
    QuadraticFiniteSum q({Matrix(L * Matrix::Identity(4, 4))}, {Vector::Zero(4)}, {0.0}, part);
    const Vector x = Vector::LinSpaced(4, 1.0, 2.0);
    BacktrackOptions o;
    o.init = 0.01;
    const double got = backtrack_lambda(q, 1, x, o);
    CHECK(got >= L * (1 - 1e-12));
    CHECK(got <= 2 * L);
    QuadraticFiniteSum q2({Matrix(2 * L * Matrix::Identity(4, 4))}, {Vector::Zero(4)}, {0.0}, part);
    CHECK(backtrack_lambda(q2, 1, x, o) >= got);
  }
}

TEST_CASE("backtracking on a linear function stays at init") {
  const auto part = BlockPartition::uniform(3, 1);
  QuadraticFiniteSum lin({Matrix::Zero(3, 3)}, {Vector::Ones(3)}, {0.0}, part);
  BacktrackOptions o;
  o.init = 0.25;
  CHECK(backtrack_lambda(lin, 0, Vector::Zero(3), o) == 0.25);
  o.growth = 1.0;
  CHECK_THROWS(backtrack_lambda(lin, 0, Vector::Zero(3), o));
}

TEST_CASE("backtracking is deterministic on a sigmoid instance") {
  const auto part = BlockPartition::uniform(6, 2);
  const auto s = generate_classification(3, 20, 6, part, 2.0);
  const Vector x = Vector::Constant(6, 0.2);
  CHECK(backtrack_lambda(s, 0, x) == backtrack_lambda(s, 0, x));
}

}
