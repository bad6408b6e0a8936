#pragma once

#include "blockcd/block_core.hpp"
#include "blockcd/objective.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bcd {

// Largest eigenvalue of a symmetric PSD matrix by power iteration from the
// all-ones vector plus a fixed perturbation. Stops when ||Mx - lambda x|| <=
// tol * lambda, or when the geometric tail of the Rayleigh quotient
// increments is below tol * lambda.
double spectral_norm(const Matrix& m, double tol = 1e-10, int max_iter = 10000);

struct LConstants {
  double L_hat = 0.0;
  double L_tilde = 0.0;
};

// Spectral norms of Lambda^{-1/2} (sum_j hat/tilde Q^j) Lambda^{-1/2}.
LConstants compute_L_constants(const std::vector<SymmetricMatrix>& q_list,
                               const DiagonalMetric& metric);

struct SmoothnessProfile {
  LConstants L;
  bool supplied = false;  // taken from config rather than computed
};

enum class StepMode { theorem3, corollary4_pl };

struct StepSizePlan {
  double eta = 1.0;
  double c0 = 0.0;
  StepMode mode = StepMode::theorem3;
  double p = 1.0;
  std::uint64_t b = 1;
  std::uint64_t bprime = 1;
  std::optional<std::uint64_t> n;
  std::optional<double> mu;
};

double theorem3_c0(const LConstants& L, double p, std::uint64_t b, std::uint64_t bprime,
                   std::optional<std::uint64_t> n);
double corollary4_c0(const LConstants& L, double p, std::uint64_t b, std::uint64_t bprime,
                     std::optional<std::uint64_t> n);
// Positive root of c0 eta^2 + eta - 1, rounded down so the inequality holds
// in floating point; 1 when c0 = 0.
double eta_from_c0(double c0);

StepSizePlan step_size(const LConstants& L, double p, std::uint64_t b, std::uint64_t bprime,
                       std::optional<std::uint64_t> n, StepMode mode,
                       std::optional<double> mu = std::nullopt);

struct BacktrackOptions {
  std::size_t probe_count = 4;
  double growth = 2.0;
  double init = 1.0;
  std::uint64_t seed = 0;
  int max_growths = 200;
};

// Smallest init * growth^t for which the block descent inequality holds on
// the candidate gradient step -grad_j / L and on probe_count seeded probe
// directions from x.
double backtrack_lambda(const Objective& prob, Index j, const Vector& x,
                        const BacktrackOptions& opts = {});

// f(x + delta) <= f(x) + <g, delta> + L/2 ||delta||^2 with a rounding allowance.
bool block_descent_holds(double f_new, double f_old, double inner, double L, double step_sq);

}  // namespace bcd
