#include "blockcd/objective.hpp"
#include "blockcd/sampling.hpp"

#include <stdexcept>
#include <vector>

namespace bcd {

EnumerationResult lemma1_enumeration_check(const Objective& prob, const DiagonalMetric& metric,
                                           const Vector& x, Index j, std::uint64_t b) {
  auto n_opt = prob.num_components();
  if (!n_opt) throw std::invalid_argument("enumeration needs a finite sum");
  const std::uint64_t n = *n_opt;
  if (n > 10) throw std::invalid_argument("enumeration limited to n <= 10");
  if (b < 1 || b > n) throw std::invalid_argument("need 1 <= b <= n");

  const Vector lam = metric.block(j);
  const Vector g = prob.block_grad(j, x);
  std::vector<Vector> comp;
  double var = 0.0;
  for (ComponentId i = 0; i < n; ++i) {
    comp.push_back(prob.component_block_grad(i, j, x));
    var += metric_norm_sq(comp.back() - g, lam, true);
  }
  var /= static_cast<double>(n);

  // lexicographic walk over all b-subsets
  std::vector<std::uint64_t> idx(b);
  for (std::uint64_t k = 0; k < b; ++k) idx[k] = k;
  double total = 0.0;
  std::uint64_t count = 0;
  while (true) {
    Vector acc = Vector::Zero(g.size());
    for (auto i : idx) acc += comp[i];
    total += metric_norm_sq(acc / static_cast<double>(b) - g, lam, true);
    ++count;
    std::int64_t k = static_cast<std::int64_t>(b) - 1;
    while (k >= 0 && idx[k] == n - b + static_cast<std::uint64_t>(k)) --k;
    if (k < 0) break;
    ++idx[k];
    for (auto t = static_cast<std::uint64_t>(k) + 1; t < b; ++t) idx[t] = idx[t - 1] + 1;
  }
  return {total / static_cast<double>(count), variance_factor(n, b) * var, var};
}

}  // namespace bcd
