#include "blockcd/regularizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace bcd {

namespace {

void check_prox_args(const Eigen::Ref<const Vector>& center, const Eigen::Ref<const Vector>& linear,
                     double eta, const Eigen::Ref<const Vector>& lambda) {
  if (!(eta > 0.0)) throw std::invalid_argument("prox step eta must be positive");
  if (center.size() != linear.size() || center.size() != lambda.size())
    throw std::invalid_argument("prox: dimension mismatch");
  if ((lambda.array() <= 0.0).any()) throw std::invalid_argument("prox: metric entries must be positive");
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

Regularizer Regularizer::l1(double weight) {
  if (!(weight >= 0.0) || !std::isfinite(weight))
    throw std::invalid_argument("l1 weight must be finite and nonnegative");
  return Regularizer(Kind::l1, weight, 0.0, 0.0);
}

Regularizer Regularizer::box(double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("box needs lo <= hi");
  return Regularizer(Kind::box, 0.0, lo, hi);
}

std::string Regularizer::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::zero: return "zero";
    case Kind::l1: os << "l1(" << weight_ << ")"; break;
    case Kind::box: os << "box(" << lo_ << "," << hi_ << ")"; break;
  }
  return os.str();
}

double Regularizer::value(const Eigen::Ref<const Vector>& x) const {
  switch (kind_) {
    case Kind::zero: return 0.0;
    case Kind::l1: return weight_ * x.cwiseAbs().sum();
    case Kind::box:
      for (Index i = 0; i < x.size(); ++i)
        if (x[i] < lo_ || x[i] > hi_) return std::numeric_limits<double>::infinity();
      return 0.0;
  }
  return 0.0;
}

Vector Regularizer::metric_prox(const Eigen::Ref<const Vector>& center,
                                const Eigen::Ref<const Vector>& linear, double eta,
                                const Eigen::Ref<const Vector>& lambda) const {
  check_prox_args(center, linear, eta, lambda);
  Vector z = center - eta * linear.cwiseQuotient(lambda);
  switch (kind_) {
    case Kind::zero: break;
    case Kind::l1:
      for (Index i = 0; i < z.size(); ++i) {
        const double t = eta * weight_ / lambda[i];
        z[i] = sign(z[i]) * std::max(std::abs(z[i]) - t, 0.0);
      }
      break;
    case Kind::box: z = z.cwiseMax(lo_).cwiseMin(hi_); break;
  }
  return z;
}

Vector Regularizer::prox_subgradient(const Eigen::Ref<const Vector>& center,
                                     const Eigen::Ref<const Vector>& linear, double eta,
                                     const Eigen::Ref<const Vector>& lambda,
                                     const Eigen::Ref<const Vector>& x) const {
  check_prox_args(center, linear, eta, lambda);
  Vector r = Vector::Zero(x.size());
  if (kind_ == Kind::zero) return r;
  for (Index i = 0; i < x.size(); ++i) {
    const double raw = lambda[i] * (center[i] - x[i]) / eta - linear[i];
    if (kind_ == Kind::l1) {
      r[i] = x[i] != 0.0 ? weight_ * sign(x[i]) : std::clamp(raw, -weight_, weight_);
    } else if (lo_ == hi_) {
      r[i] = raw;
    } else if (x[i] == lo_) {
      r[i] = std::min(raw, 0.0);
    } else if (x[i] == hi_) {
      r[i] = std::max(raw, 0.0);
    }
  }
  return r;
}

Vector Regularizer::min_norm_subgradient(const Eigen::Ref<const Vector>& x,
                                         const Eigen::Ref<const Vector>& grad) const {
  if (x.size() != grad.size()) throw std::invalid_argument("dimension mismatch");
  Vector r = Vector::Zero(x.size());
  if (kind_ == Kind::zero) return r;
  for (Index i = 0; i < x.size(); ++i) {
    if (kind_ == Kind::l1) {
      r[i] = x[i] != 0.0 ? weight_ * sign(x[i]) : std::clamp(-grad[i], -weight_, weight_);
      continue;
    }
    if (x[i] < lo_ || x[i] > hi_) throw std::domain_error("point outside the box");
    if (lo_ == hi_) r[i] = -grad[i];
    else if (x[i] == lo_) r[i] = std::min(-grad[i], 0.0);
    else if (x[i] == hi_) r[i] = std::max(-grad[i], 0.0);
  }
  return r;
}

double Regularizer::subgradient_violation(const Eigen::Ref<const Vector>& x,
                                          const Eigen::Ref<const Vector>& r) const {
  double worst = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    double v = 0.0;
    switch (kind_) {
      case Kind::zero: v = std::abs(r[i]); break;
      case Kind::l1:
        v = x[i] != 0.0 ? std::abs(r[i] - weight_ * sign(x[i]))
                        : std::max(std::abs(r[i]) - weight_, 0.0);
        break;
      case Kind::box:
        if (x[i] < lo_ || x[i] > hi_) return std::numeric_limits<double>::infinity();
        if (lo_ == hi_) v = 0.0;
        else if (x[i] == lo_) v = std::max(r[i], 0.0);
        else if (x[i] == hi_) v = std::max(-r[i], 0.0);
        else v = std::abs(r[i]);
        break;
    }
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace bcd
