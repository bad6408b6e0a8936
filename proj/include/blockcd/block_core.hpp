#pragma once

#include <Eigen/Core>

#include <vector>

namespace bcd {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Contiguous coordinate range [offset, offset + size).
struct Range {
  Index offset = 0;
  Index size = 0;
  Index end() const { return offset + size; }
  bool operator==(const Range&) const = default;
};

class BlockPartition {
 public:
  explicit BlockPartition(std::vector<Index> sizes);

  // m nearly equal blocks; the first d % m blocks get one extra coordinate.
  static BlockPartition uniform(Index d, Index m);
  static BlockPartition single(Index d) { return uniform(d, 1); }

  Index num_blocks() const { return static_cast<Index>(sizes_.size()); }
  Index dim() const { return dim_; }
  Index size(Index j) const;
  Index offset(Index j) const;
  Range range(Index j) const { return {offset(j), size(j)}; }
  Index block_of(Index coord) const;
  const std::vector<Index>& sizes() const { return sizes_; }
  std::vector<Range> ranges() const;

  bool operator==(const BlockPartition& o) const { return sizes_ == o.sizes_; }

 private:
  void check_block(Index j) const;

  std::vector<Index> sizes_;
  std::vector<Index> offsets_;
  Index dim_ = 0;
};

// Diagonal Λ; entries strictly positive.
class DiagonalMetric {
 public:
  DiagonalMetric(Vector diag, BlockPartition partition);

  static DiagonalMetric identity(const BlockPartition& partition);
  // Λ_j = L_j I.
  static DiagonalMetric from_block_scalars(const std::vector<double>& per_block,
                                           const BlockPartition& partition);

  const Vector& diag() const { return diag_; }
  const BlockPartition& partition() const { return partition_; }
  Index dim() const { return diag_.size(); }
  auto block(Index j) const { return diag_.segment(partition_.offset(j), partition_.size(j)); }
  auto segment(Range r) const { return diag_.segment(r.offset, r.size); }

  // Replaces Λ_j by L I (backtracking path).
  void set_block_scalar(Index j, double value);

 private:
  Vector diag_;
  BlockPartition partition_;
};

// Σ λ_i v_i² or, inverted, Σ v_i² / λ_i.
double metric_norm_sq(const Eigen::Ref<const Vector>& v, const Eigen::Ref<const Vector>& diag,
                      bool inverted = false);
double metric_norm_sq(const Vector& v, const DiagonalMetric& metric, bool inverted = false);

// Dense symmetric matrix; symmetrized on ingestion, rejected when the
// asymmetry exceeds rel_tol relative to the largest entry.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(const Matrix& m, double rel_tol = 1e-12);
  static SymmetricMatrix zero(Index d);

  const Matrix& dense() const { return m_; }
  Index dim() const { return m_.rows(); }

 private:
  SymmetricMatrix() = default;
  Matrix m_;
};

enum class Mask { hat, tilde };

// Block index j is zero based. hat(j) zeroes rows and columns of blocks
// 0..j-1, tilde(j) keeps only those.
double masked_quadratic_form(const SymmetricMatrix& q, Mask mask, Index j, const Vector& u,
                             const BlockPartition& partition);
Matrix mask_materialize(const SymmetricMatrix& q, Mask mask, Index j,
                        const BlockPartition& partition);

}  // namespace bcd
