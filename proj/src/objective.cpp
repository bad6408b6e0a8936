#include "blockcd/objective.hpp"

#include <stdexcept>
#include <string>

namespace bcd {

void Objective::check_dim(const Vector& x) const {
  if (x.size() != dim())
    throw std::invalid_argument("point has dimension " + std::to_string(x.size()) + ", expected " +
                                std::to_string(dim()));
}

void Objective::check_component(ComponentId i) const {
  auto n = num_components();
  if (n && i >= *n) throw std::out_of_range("component index " + std::to_string(i) + " >= n");
}

Vector Objective::minibatch_grad_rows(const std::vector<ComponentId>& batch, Range r,
                                      const Vector& x) const {
  if (batch.empty()) throw std::invalid_argument("empty minibatch");
  Vector acc = Vector::Zero(r.size);
  for (ComponentId i : batch) acc += component_grad_rows(i, r, x);
  return acc / static_cast<double>(batch.size());
}

Vector Objective::minibatch_grad_diff_rows(const std::vector<ComponentId>& batch, Range r,
                                           const Vector& x, const Vector& y) const {
  if (batch.empty()) throw std::invalid_argument("empty minibatch");
  Vector acc = Vector::Zero(r.size);
  for (ComponentId i : batch) acc += component_grad_rows(i, r, x) - component_grad_rows(i, r, y);
  return acc / static_cast<double>(batch.size());
}

Vector Objective::full_grad(const Vector& x) const {
  Vector g(dim());
  for (Index j = 0; j < partition_.num_blocks(); ++j)
    g.segment(partition_.offset(j), partition_.size(j)) = block_grad(j, x);
  return g;
}

Vector Objective::component_grad(ComponentId i, const Vector& x) const {
  Vector g(dim());
  for (Index j = 0; j < partition_.num_blocks(); ++j)
    g.segment(partition_.offset(j), partition_.size(j)) = component_block_grad(i, j, x);
  return g;
}

Vector Objective::sample_block_grad(RngStream& rng, Index j, const Vector& x) const {
  return component_block_grad(draw_batch(rng, 1).front(), j, x);
}

std::vector<ComponentId> Objective::draw_batch(RngStream& rng, std::uint64_t b) const {
  auto n = num_components();
  return n ? draw_minibatch(rng, *n, b) : draw_iid(rng, b);
}

}  // namespace bcd
