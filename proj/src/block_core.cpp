#include "blockcd/block_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bcd {

BlockPartition::BlockPartition(std::vector<Index> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.empty()) throw std::invalid_argument("partition needs at least one block");
  offsets_.reserve(sizes_.size());
  for (Index s : sizes_) {
    if (s < 1) throw std::invalid_argument("block sizes must be positive");
    offsets_.push_back(dim_);
    dim_ += s;
  }
}

BlockPartition BlockPartition::uniform(Index d, Index m) {
  if (m < 1 || d < m)
    throw std::invalid_argument("uniform partition needs 1 <= m <= d (got d=" +
                                std::to_string(d) + ", m=" + std::to_string(m) + ")");
  std::vector<Index> sizes(static_cast<std::size_t>(m), d / m);
  for (Index j = 0; j < d % m; ++j) ++sizes[static_cast<std::size_t>(j)];
  return BlockPartition(std::move(sizes));
}

void BlockPartition::check_block(Index j) const {
  if (j < 0 || j >= num_blocks())
    throw std::out_of_range("block index " + std::to_string(j) + " outside [0, " +
                            std::to_string(num_blocks()) + ")");
}

Index BlockPartition::size(Index j) const {
  check_block(j);
  return sizes_[static_cast<std::size_t>(j)];
}

Index BlockPartition::offset(Index j) const {
  check_block(j);
  return offsets_[static_cast<std::size_t>(j)];
}

Index BlockPartition::block_of(Index coord) const {
  if (coord < 0 || coord >= dim_) throw std::out_of_range("coordinate outside partition");
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), coord);
  return static_cast<Index>(it - offsets_.begin()) - 1;
}

std::vector<Range> BlockPartition::ranges() const {
  std::vector<Range> out;
  out.reserve(sizes_.size());
  for (Index j = 0; j < num_blocks(); ++j) out.push_back(range(j));
  return out;
}

DiagonalMetric::DiagonalMetric(Vector diag, BlockPartition partition)
    : diag_(std::move(diag)), partition_(std::move(partition)) {
  if (diag_.size() != partition_.dim())
    throw std::invalid_argument("metric length does not match partition dimension");
  for (Index i = 0; i < diag_.size(); ++i)
    if (!(diag_[i] > 0.0) || !std::isfinite(diag_[i]))
      throw std::invalid_argument("metric entries must be finite and positive");
}

DiagonalMetric DiagonalMetric::identity(const BlockPartition& partition) {
  return DiagonalMetric(Vector::Ones(partition.dim()), partition);
}

DiagonalMetric DiagonalMetric::from_block_scalars(const std::vector<double>& per_block,
                                                  const BlockPartition& partition) {
  if (static_cast<Index>(per_block.size()) != partition.num_blocks())
    throw std::invalid_argument("need one metric scalar per block");
  Vector diag(partition.dim());
  for (Index j = 0; j < partition.num_blocks(); ++j)
    diag.segment(partition.offset(j), partition.size(j)).setConstant(per_block[j]);
  return DiagonalMetric(std::move(diag), partition);
}

void DiagonalMetric::set_block_scalar(Index j, double value) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw std::invalid_argument("metric entries must be finite and positive");
  diag_.segment(partition_.offset(j), partition_.size(j)).setConstant(value);
}

double metric_norm_sq(const Eigen::Ref<const Vector>& v, const Eigen::Ref<const Vector>& diag,
                      bool inverted) {
  if (v.size() != diag.size()) throw std::invalid_argument("metric_norm_sq: dimension mismatch");
  if (inverted) return (v.array().square() / diag.array()).sum();
  return (v.array().square() * diag.array()).sum();
}

double metric_norm_sq(const Vector& v, const DiagonalMetric& metric, bool inverted) {
  return metric_norm_sq(v, metric.diag(), inverted);
}

SymmetricMatrix::SymmetricMatrix(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) throw std::invalid_argument("matrix is not square");
  const double scale = m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
  const double asym = m.size() ? (m - m.transpose()).cwiseAbs().maxCoeff() : 0.0;
  if (!std::isfinite(scale)) throw std::invalid_argument("matrix has non-finite entries");
  if (asym > rel_tol * scale)
    throw std::invalid_argument("matrix is not symmetric (asymmetry " + std::to_string(asym) +
                                ")");
  m_ = 0.5 * (m + m.transpose());
}

SymmetricMatrix SymmetricMatrix::zero(Index d) {
  SymmetricMatrix s;
  s.m_ = Matrix::Zero(d, d);
  return s;
}

namespace {

Index masked_prefix(const SymmetricMatrix& q, Index j, const BlockPartition& partition) {
  if (q.dim() != partition.dim()) throw std::invalid_argument("matrix/partition size mismatch");
  return partition.offset(j);  // throws for j outside [0, m)
}

}  // namespace

double masked_quadratic_form(const SymmetricMatrix& q, Mask mask, Index j, const Vector& u,
                             const BlockPartition& partition) {
  const Index off = masked_prefix(q, j, partition);
  if (u.size() != q.dim()) throw std::invalid_argument("vector/matrix size mismatch");
  const Index d = q.dim();
  if (mask == Mask::hat) {
    const Index t = d - off;
    auto tail = u.tail(t);
    return tail.dot(q.dense().bottomRightCorner(t, t) * tail);
  }
  auto head = u.head(off);
  return head.dot(q.dense().topLeftCorner(off, off) * head);
}

Matrix mask_materialize(const SymmetricMatrix& q, Mask mask, Index j,
                        const BlockPartition& partition) {
  const Index off = masked_prefix(q, j, partition);
  const Index d = q.dim();
  Matrix out = Matrix::Zero(d, d);
  if (mask == Mask::hat)
    out.bottomRightCorner(d - off, d - off) = q.dense().bottomRightCorner(d - off, d - off);
  else
    out.topLeftCorner(off, off) = q.dense().topLeftCorner(off, off);
  return out;
}

}  // namespace bcd
