#pragma once

#include <Eigen/Dense>

#include <optional>
#include <utility>
#include <vector>

#include "sgsqp/error.hpp"

namespace sgsqp {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Split of an N-vector into s >= 2 blocks of sizes n_1..n_s.
class BlockPartition {
 public:
  BlockPartition() = default;

  explicit BlockPartition(std::vector<Index> dims) : dims_(std::move(dims)) {
    if (dims_.size() < 2) throw Error(Errc::DimensionMismatch, "a partition needs at least 2 blocks");
    offsets_.reserve(dims_.size() + 1);
    offsets_.push_back(0);
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (dims_[i] < 1)
        throw Error(Errc::DimensionMismatch, "block dimensions must be positive", static_cast<int>(i) + 1);
      offsets_.push_back(offsets_.back() + dims_[i]);
    }
  }

  Index blocks() const { return static_cast<Index>(dims_.size()); }
  Index dim(Index i) const { return dims_[static_cast<std::size_t>(i)]; }
  Index offset(Index i) const { return offsets_[static_cast<std::size_t>(i)]; }
  /// N_j = n_1 + ... + n_j (j is a block count, 0 <= j <= s).
  Index leading(Index j) const { return offsets_[static_cast<std::size_t>(j)]; }
  Index total() const { return offsets_.empty() ? 0 : offsets_.back(); }
  const std::vector<Index>& dims() const { return dims_; }

  bool operator==(const BlockPartition& o) const { return dims_ == o.dims_; }
  bool operator!=(const BlockPartition& o) const { return !(*this == o); }

 private:
  std::vector<Index> dims_;
  std::vector<Index> offsets_;
};

/// Matrix-shape tag for a block that stores a matrix variable.
struct BlockShape {
  Index rows = 0;
  Index cols = 0;
  bool symmetric_vec = false;  // norm-preserving svec of a rows x rows symmetric matrix

  Index stored_size() const { return symmetric_vec ? rows * (rows + 1) / 2 : rows * cols; }
};

/// Partitioned vector x = (x_1; ...; x_s).
class BlockVector {
 public:
  BlockVector() = default;
  explicit BlockVector(BlockPartition p) : part_(std::move(p)), data_(Vec::Zero(part_.total())) {}
  BlockVector(BlockPartition p, Vec data) : part_(std::move(p)), data_(std::move(data)) {
    if (data_.size() != part_.total())
      throw Error(Errc::DimensionMismatch, "vector length does not match partition");
  }

  const BlockPartition& partition() const { return part_; }
  Index blocks() const { return part_.blocks(); }
  Index size() const { return data_.size(); }

  const Vec& data() const { return data_; }
  Vec& data() { return data_; }

  auto block(Index i) { return data_.segment(part_.offset(i), part_.dim(i)); }
  auto block(Index i) const { return data_.segment(part_.offset(i), part_.dim(i)); }

  double norm() const { return data_.norm(); }

  void set_shape(Index i, BlockShape s) {
    if (s.stored_size() != part_.dim(i) || (s.symmetric_vec && s.rows != s.cols))
      throw Error(Errc::ShapeMismatch, "shape tag inconsistent with block dimension", static_cast<int>(i) + 1);
    shapes_.resize(static_cast<std::size_t>(part_.blocks()));
    shapes_[static_cast<std::size_t>(i)] = s;
  }
  std::optional<BlockShape> shape(Index i) const {
    if (static_cast<std::size_t>(i) >= shapes_.size()) return std::nullopt;
    return shapes_[static_cast<std::size_t>(i)];
  }

  static BlockVector zeros_like(const BlockVector& v) { return BlockVector(v.part_); }

 private:
  BlockPartition part_;
  Vec data_;
  std::vector<std::optional<BlockShape>> shapes_;
};

inline void require_same_partition(const BlockPartition& a, const BlockPartition& b, const char* what) {
  if (a != b) throw Error(Errc::DimensionMismatch, what);
}

}  // namespace sgsqp
