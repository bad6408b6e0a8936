#pragma once

#include "blockcd/block_core.hpp"
#include "blockcd/sampling.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bcd {

// f = (1/n) sum_i f_i, or the expectation over a streaming oracle when
// num_components() is empty. Gradients are requested on coordinate ranges so
// the same objective serves cyclic and full-vector methods.
class Objective {
 public:
  explicit Objective(BlockPartition partition) : partition_(std::move(partition)) {}
  virtual ~Objective() = default;

  const BlockPartition& partition() const { return partition_; }
  Index dim() const { return partition_.dim(); }

  virtual std::optional<std::uint64_t> num_components() const = 0;
  bool is_streaming() const { return !num_components().has_value(); }
  virtual std::string family() const = 0;

  virtual double value(const Vector& x) const = 0;
  virtual Vector grad_rows(Range r, const Vector& x) const = 0;
  virtual double component_value(ComponentId i, const Vector& x) const = 0;
  virtual Vector component_grad_rows(ComponentId i, Range r, const Vector& x) const = 0;

  // (1/b) sum over the batch, accumulated in batch order.
  virtual Vector minibatch_grad_rows(const std::vector<ComponentId>& batch, Range r,
                                     const Vector& x) const;
  // (1/b) sum over the batch of grad f_i(x) - grad f_i(y).
  virtual Vector minibatch_grad_diff_rows(const std::vector<ComponentId>& batch, Range r,
                                          const Vector& x, const Vector& y) const;

  Vector block_grad(Index j, const Vector& x) const { return grad_rows(partition_.range(j), x); }
  // Concatenation of block_grad, so the two agree bit for bit.
  Vector full_grad(const Vector& x) const;
  Vector component_block_grad(ComponentId i, Index j, const Vector& x) const {
    return component_grad_rows(i, partition_.range(j), x);
  }
  Vector component_grad(ComponentId i, const Vector& x) const;
  // Block gradient of one randomly drawn component.
  Vector sample_block_grad(RngStream& rng, Index j, const Vector& x) const;

  // Draws a batch the way the algorithms do: without replacement for finite
  // n, i.i.d. for streaming.
  std::vector<ComponentId> draw_batch(RngStream& rng, std::uint64_t b) const;

 protected:
  void check_dim(const Vector& x) const;
  void check_component(ComponentId i) const;

 private:
  BlockPartition partition_;
};

}  // namespace bcd
