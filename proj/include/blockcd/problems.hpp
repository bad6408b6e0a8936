#pragma once

#include "blockcd/objective.hpp"
#include "blockcd/regularizer.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

namespace bcd {

// f_i(x) = 1/2 x'A_i x + b_i'x + c_i
class QuadraticFiniteSum final : public Objective {
 public:
  QuadraticFiniteSum(std::vector<Matrix> A, std::vector<Vector> b, std::vector<double> c,
                     BlockPartition partition, bool box_recommended = false);

  std::optional<std::uint64_t> num_components() const override { return A_.size(); }
  std::string family() const override { return "quadratic"; }

  double value(const Vector& x) const override;
  Vector grad_rows(Range r, const Vector& x) const override;
  double component_value(ComponentId i, const Vector& x) const override;
  Vector component_grad_rows(ComponentId i, Range r, const Vector& x) const override;
  Vector minibatch_grad_diff_rows(const std::vector<ComponentId>& batch, Range r,
                                  const Vector& x, const Vector& y) const override;

  std::size_t n() const { return A_.size(); }
  const std::vector<Matrix>& A() const { return A_; }
  const std::vector<Vector>& b() const { return b_; }
  const std::vector<double>& c() const { return c_; }
  const Matrix& mean_A() const { return mean_A_; }
  const Vector& mean_b() const { return mean_b_; }
  double mean_c() const { return mean_c_; }
  bool box_recommended() const { return box_recommended_; }

  // Unconstrained minimizer when mean_A is positive definite.
  std::optional<Vector> minimizer() const;
  QuadraticFiniteSum with_partition(BlockPartition partition) const;

 private:
  std::vector<Matrix> A_;
  std::vector<Vector> b_;
  std::vector<double> c_;
  Matrix mean_A_;
  Vector mean_b_;
  double mean_c_ = 0.0;
  bool box_recommended_ = false;
};

// f_i(x) = 1/(1 + exp(y_i a_i'x))
class SigmoidClassification final : public Objective {
 public:
  SigmoidClassification(Matrix data, Vector labels, BlockPartition partition);

  std::optional<std::uint64_t> num_components() const override {
    return static_cast<std::uint64_t>(data_.rows());
  }
  std::string family() const override { return "sigmoid"; }

  double value(const Vector& x) const override;
  Vector grad_rows(Range r, const Vector& x) const override;
  double component_value(ComponentId i, const Vector& x) const override;
  Vector component_grad_rows(ComponentId i, Range r, const Vector& x) const override;

  const Matrix& data() const { return data_; }
  const Vector& labels() const { return labels_; }
  SigmoidClassification with_partition(BlockPartition partition) const;

 private:
  Matrix data_;
  Vector labels_;
};

// Streaming quadratic: f(x; xi) = 1/2 x'Ax + (b + noise z_xi)'x with z_xi a
// standard normal vector that is a pure function of (seed, xi). The mean
// objective is known in closed form, so gradients of f are exact.
class StreamingQuadratic final : public Objective {
 public:
  StreamingQuadratic(Matrix A, Vector b, double noise, std::uint64_t seed, BlockPartition partition);

  std::optional<std::uint64_t> num_components() const override { return std::nullopt; }
  std::string family() const override { return "streaming"; }

  double value(const Vector& x) const override;
  Vector grad_rows(Range r, const Vector& x) const override;
  double component_value(ComponentId xi, const Vector& x) const override;
  Vector component_grad_rows(ComponentId xi, Range r, const Vector& x) const override;
  Vector minibatch_grad_diff_rows(const std::vector<ComponentId>& batch, Range r,
                                  const Vector& x, const Vector& y) const override;

  const Matrix& A() const { return A_; }
  const Vector& b() const { return b_; }
  double noise() const { return noise_; }
  // Exact per-sample gradient variance in the lambda^{-1} norm (x independent).
  double sigma_sq(const Vector& lambda_diag) const { return noise_ * noise_ * lambda_diag.cwiseInverse().sum(); }

 private:
  Vector noise_vector(ComponentId xi) const;

  Matrix A_;
  Vector b_;
  double noise_;
  std::uint64_t seed_;
};

QuadraticFiniteSum generate_quadratic(std::uint64_t seed, std::size_t n, Index d,
                                      const BlockPartition& partition, double condition_number,
                                      bool convex);
SigmoidClassification generate_classification(std::uint64_t seed, std::size_t n, Index d,
                                              const BlockPartition& partition, double margin);
StreamingQuadratic generate_streaming(std::uint64_t seed, Index d, const BlockPartition& partition,
                                      double condition_number, double noise);

// Which smoothness assumption the Q matrix certifies: the averaged
// per-component version (default) or the one for the mean function only.
enum class QKind { component_average, mean_function };

SymmetricMatrix exact_Qj(const QuadraticFiniteSum& prob, Index j, const DiagonalMetric& metric,
                         QKind kind = QKind::component_average);
SymmetricMatrix exact_Qj(const StreamingQuadratic& prob, Index j, const DiagonalMetric& metric);
std::vector<SymmetricMatrix> exact_Q_list(const QuadraticFiniteSum& prob,
                                          const DiagonalMetric& metric,
                                          QKind kind = QKind::component_average);
std::vector<SymmetricMatrix> exact_Q_list(const StreamingQuadratic& prob,
                                          const DiagonalMetric& metric);

// Lambda_j = L_j I with L_j the mean over components of ||A_i restricted to
// block j||_2, which satisfies the block smoothness assumption for f and for
// every f_i on average.
DiagonalMetric quadratic_block_metric(const QuadraticFiniteSum& prob);
DiagonalMetric quadratic_block_metric(const StreamingQuadratic& prob);

// lambda_min(Lambda^{-1/2} mean_A Lambda^{-1/2}); the PL constant for r = 0 and
// also the strong convexity modulus in the Lambda norm.
double pl_constant(const Matrix& mean_A, const DiagonalMetric& metric);

// max over probes of (1/n) sum_i ||grad f_i(x) - grad f(x)||^2_{Lambda^{-1}}.
double estimate_sigma_sq(const Objective& prob, const DiagonalMetric& metric,
                         const std::vector<Vector>& probes);
// Sample-mean version usable for streaming objectives.
double estimate_sigma_sq_sampled(const Objective& prob, const DiagonalMetric& metric,
                                 const std::vector<Vector>& probes, std::uint64_t seed,
                                 std::uint64_t samples);

// F(x) = f(x) + r(x), +inf outside the domain.
double composite_value(const Objective& prob, const Regularizer& reg, const Vector& x);

// Flat text format: header "quadratic n d m" or "sigmoid n d m", block
// sizes, then row-major values at 17 significant digits.
void write_instance(std::ostream& os, const QuadraticFiniteSum& prob);
void write_instance(std::ostream& os, const SigmoidClassification& prob);
std::unique_ptr<Objective> read_instance(std::istream& is);

}  // namespace bcd
