#include "blockcd/smoothness.hpp"

#include "blockcd/error.hpp"
#include "blockcd/sampling.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace bcd {

double spectral_norm(const Matrix& m_in, double tol, int max_iter) {
  if (m_in.rows() != m_in.cols()) throw std::invalid_argument("spectral_norm needs a square matrix");
  const Index d = m_in.rows();
  if (d == 0) return 0.0;
  const Matrix m = 0.5 * (m_in + m_in.transpose());
  if (m.cwiseAbs().maxCoeff() == 0.0) return 0.0;

  // all-ones plus a fixed-seed perturbation, so a start vector that happens
  // to be an eigenvector of a lower eigenvalue cannot trap the iteration
  RngStream perturb(0x5eed, "power-iteration");
  Vector z(d);
  for (Index k = 0; k < d; ++k) z[k] = perturb.normal();
  Vector x = (Vector::Ones(d).normalized() + 1e-2 * z.normalized()).normalized();
  double best = 0.0;
  double prev = 0.0, prev_delta = 0.0, prev_r = 0.0;
  int settled = 0;
  for (int it = 0; it < max_iter; ++it) {
    Vector y = m * x;
    const double lambda = x.dot(y);
    best = std::max(best, lambda);
    if (lambda > 0.0 && (y - lambda * x).norm() <= tol * lambda) return lambda;
    // The Rayleigh quotient rises monotonically and its increments shrink
    // geometrically; a close second eigenvalue slows the eigenvector (and the
    // residual) long after the eigenvalue itself has settled, so also stop when
    // the extrapolated remaining rise is below tolerance.
    const double delta = lambda - prev;
    if (it >= 2 && lambda > 0.0) {
      if (std::abs(delta) <= 4.0 * std::numeric_limits<double>::epsilon() * lambda &&
          std::abs(prev_delta) <= 4.0 * std::numeric_limits<double>::epsilon() * lambda)
        return lambda;
      // the ratio must also be steady: a drifting ratio means a slower
      // component is taking over and the tail estimate is not yet valid
      const double r = delta / prev_delta;
      const bool steady = std::abs(r - prev_r) <= 1e-2 * r;
      const bool small = delta > 0.0 && r > 0.0 && r < 1.0 && delta * r / (1.0 - r) <= tol * lambda;
      settled = small && steady ? settled + 1 : 0;
      if (settled >= 5) return lambda;
      prev_r = r;
    }
    prev_delta = delta;
    prev = lambda;
    if (y.norm() == 0.0) {
      for (Index k = 0; k < d; ++k) y[k] = perturb.normal();
    }
    x = y.normalized();
  }
  throw ConvergenceError("power iteration did not converge in " + std::to_string(max_iter) +
                             " iterations (best estimate " + std::to_string(best) + ")",
                         best);
}

LConstants compute_L_constants(const std::vector<SymmetricMatrix>& q_list,
                               const DiagonalMetric& metric) {
  const auto& part = metric.partition();
  if (static_cast<Index>(q_list.size()) != part.num_blocks())
    throw std::invalid_argument("need one Q matrix per block");
  const Index d = part.dim();
  Matrix hat = Matrix::Zero(d, d);
  Matrix tilde = Matrix::Zero(d, d);
  for (Index j = 0; j < part.num_blocks(); ++j) {
    const auto& q = q_list[static_cast<std::size_t>(j)];
    hat += mask_materialize(q, Mask::hat, j, part);
    tilde += mask_materialize(q, Mask::tilde, j, part);
  }
  const Vector s = metric.diag().cwiseInverse().cwiseSqrt();
  return {spectral_norm(s.asDiagonal() * hat * s.asDiagonal()),
          spectral_norm(s.asDiagonal() * tilde * s.asDiagonal())};
}

namespace {

void check_schedule(double p, std::uint64_t b, std::uint64_t bprime,
                    std::optional<std::uint64_t> n) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in (0, 1]");
  if (bprime < 1 || bprime > b) throw std::invalid_argument("need 1 <= b' <= b");
  if (n && b > *n) throw std::invalid_argument("need b <= n");
}

}  // namespace

double theorem3_c0(const LConstants& L, double p, std::uint64_t b, std::uint64_t bprime,
                   std::optional<std::uint64_t> n) {
  check_schedule(p, b, bprime, n);
  const double bp = static_cast<double>(bprime);
  const double vf = variance_factor(n, b);
  return 2.0 * (1.0 - p) * L.L_hat / (p * bp) + L.L_hat +
         2.0 * (p * vf + (1.0 - p) / bp) * L.L_tilde / p;
}

double corollary4_c0(const LConstants& L, double p, std::uint64_t b, std::uint64_t bprime,
                     std::optional<std::uint64_t> n) {
  check_schedule(p, b, bprime, n);
  const double bp = static_cast<double>(bprime);
  const double vf = variance_factor(n, b);
  return L.L_hat + 4.0 * L.L_hat / (p * bp) + (4.0 * L.L_tilde / p) * (p * vf + (1.0 - p) / bp);
}

double eta_from_c0(double c0) {
  if (!(c0 >= 0.0) || !std::isfinite(c0)) throw std::invalid_argument("c0 must be finite and >= 0");
  if (c0 == 0.0) return 1.0;
  // same root as (-1 + sqrt(1 + 4 c0)) / (2 c0) without the cancellation
  double eta = 2.0 / (1.0 + std::sqrt(1.0 + 4.0 * c0));
  while (c0 * eta * eta + eta - 1.0 > 0.0) eta = std::nextafter(eta, 0.0);
  return eta;
}

StepSizePlan step_size(const LConstants& L, double p, std::uint64_t b, std::uint64_t bprime,
                       std::optional<std::uint64_t> n, StepMode mode, std::optional<double> mu) {
  StepSizePlan plan;
  plan.mode = mode;
  plan.p = p;
  plan.b = b;
  plan.bprime = bprime;
  plan.n = n;
  if (mode == StepMode::theorem3) {
    plan.c0 = theorem3_c0(L, p, b, bprime, n);
    plan.eta = eta_from_c0(plan.c0);
    return plan;
  }
  if (!mu || !(*mu > 0.0)) throw std::invalid_argument("PL step size needs mu > 0");
  plan.mu = mu;
  plan.c0 = corollary4_c0(L, p, b, bprime, n);
  plan.eta = eta_from_c0(plan.c0);
  if (p < 1.0) plan.eta = std::min(plan.eta, p / (*mu * (1.0 - p)));
  return plan;
}

bool block_descent_holds(double f_new, double f_old, double inner, double L, double step_sq) {
  const double rhs = f_old + inner + 0.5 * L * step_sq;
  const double slack = 1e-13 * (std::abs(f_old) + std::abs(inner) + 0.5 * L * step_sq);
  return f_new <= rhs + slack;
}

double backtrack_lambda(const Objective& prob, Index j, const Vector& x,
                        const BacktrackOptions& opts) {
  if (!(opts.growth > 1.0)) throw std::invalid_argument("backtracking growth must exceed 1");
  if (!(opts.init > 0.0)) throw std::invalid_argument("backtracking init must be positive");
  const Range r = prob.partition().range(j);
  const Vector g = prob.grad_rows(r, x);
  const double f0 = prob.value(x);
  const double scale = std::max(g.norm(), 1.0);

  RngStream rng(opts.seed, "backtrack");
  std::vector<Vector> dirs;
  for (std::size_t t = 0; t < opts.probe_count; ++t) {
    Vector u(r.size);
    for (Index k = 0; k < r.size; ++k) u[k] = rng.normal();
    dirs.push_back(u.normalized() * scale);
  }

  double L = opts.init;
  for (int t = 0; t <= opts.max_growths; ++t, L *= opts.growth) {
    bool ok = true;
    auto test = [&](const Vector& step) {
      Vector y = x;
      y.segment(r.offset, r.size) += step;
      const double f1 = prob.value(y);
      if (!std::isfinite(f1) || !block_descent_holds(f1, f0, g.dot(step), L, step.squaredNorm()))
        ok = false;
    };
    test(-g / L);
    for (std::size_t t2 = 0; ok && t2 < dirs.size(); ++t2) test(dirs[t2] / L);
    if (ok) return L;
  }
  throw Error("backtracking exceeded " + std::to_string(opts.max_growths) +
              " growth steps on block " + std::to_string(j) + "; the objective looks non-smooth");
}

}  // namespace bcd
