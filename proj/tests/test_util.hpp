#pragma once

#include "blockcd/block_core.hpp"

#include <random>

namespace testutil {

inline bcd::Vector randn(bcd::Index n, std::mt19937_64& g) {
  std::normal_distribution<double> nd;
  bcd::Vector v(n);
  for (bcd::Index i = 0; i < n; ++i) v(i) = nd(g);
  return v;
}

inline bcd::Matrix random_psd(bcd::Index d, std::mt19937_64& g) {
  bcd::Matrix b(d, d);
  for (bcd::Index j = 0; j < d; ++j) b.col(j) = randn(d, g);
  return b * b.transpose() / static_cast<double>(d);
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace testutil
