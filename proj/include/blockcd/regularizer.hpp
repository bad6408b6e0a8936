#pragma once

#include "blockcd/block_core.hpp"

#include <string>

namespace bcd {

// Coordinate-separable r with the same parameters on every coordinate, so
// every operation works on an arbitrary contiguous segment.
class Regularizer {
 public:
  enum class Kind { zero, l1, box };

  static Regularizer zero() { return Regularizer(Kind::zero, 0.0, 0.0, 0.0); }
  static Regularizer l1(double weight);
  static Regularizer box(double lo, double hi);

  Kind kind() const { return kind_; }
  double weight() const { return weight_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  std::string describe() const;

  // +inf outside the box.
  double value(const Eigen::Ref<const Vector>& x) const;

  // argmin_x <linear, x> + r(x) + (1/(2 eta)) ||x - center||^2_lambda
  Vector metric_prox(const Eigen::Ref<const Vector>& center, const Eigen::Ref<const Vector>& linear,
                     double eta, const Eigen::Ref<const Vector>& lambda) const;

  // The element r' of the subdifferential at x = prox result certified by the
  // optimality condition, i.e. (1/eta) lambda (center - x) - linear projected
  // onto the subdifferential so membership is exact.
  Vector prox_subgradient(const Eigen::Ref<const Vector>& center,
                          const Eigen::Ref<const Vector>& linear, double eta,
                          const Eigen::Ref<const Vector>& lambda,
                          const Eigen::Ref<const Vector>& x) const;

  // Element of the subdifferential at x minimizing ||grad + r'|| (any
  // diagonal weighting gives the same minimizer coordinate-wise).
  Vector min_norm_subgradient(const Eigen::Ref<const Vector>& x,
                              const Eigen::Ref<const Vector>& grad) const;

  // Largest violation of r' in the subdifferential at x, for tests.
  double subgradient_violation(const Eigen::Ref<const Vector>& x,
                               const Eigen::Ref<const Vector>& r) const;

 private:
  Regularizer(Kind k, double w, double lo, double hi) : kind_(k), weight_(w), lo_(lo), hi_(hi) {}

  Kind kind_;
  double weight_;
  double lo_;
  double hi_;
};

}  // namespace bcd
