#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <memory>
#include <optional>
#include <vector>

#include "sgsqp/partition.hpp"

namespace sgsqp {

/// Upper block triangle of a symmetric block matrix; `at(i, j)` with i <= j.
/// Missing blocks are zero.
class UpperBlocks {
 public:
  UpperBlocks() = default;
  explicit UpperBlocks(Index s) : s_(s), blocks_(static_cast<std::size_t>(s * (s + 1) / 2)) {}

  Index blocks() const { return s_; }
  std::optional<Mat>& at(Index i, Index j) { return blocks_[index(i, j)]; }
  const std::optional<Mat>& at(Index i, Index j) const { return blocks_[index(i, j)]; }

  void set(Index i, Index j, Mat m) { at(i, j) = std::move(m); }

 private:
  std::size_t index(Index i, Index j) const {
    if (i > j || i < 0 || j >= s_) throw Error(Errc::DimensionMismatch, "upper block index out of range");
    return static_cast<std::size_t>(i * s_ - i * (i - 1) / 2 + (j - i));
  }

  Index s_ = 0;
  std::vector<std::optional<Mat>> blocks_;
};

inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kPsdTol = 1e-10;

/// Symmetric positive semidefinite Q = U + D + U*, stored as its upper block
/// triangle, with every diagonal block Cholesky-factored at assembly.
///
/// Copies are cheap and share the immutable storage.
class BlockSymOperator {
 public:
  BlockSymOperator() = default;

  static BlockSymOperator assemble(const BlockPartition& part, UpperBlocks blocks) {
    const Index s = part.blocks();
    if (blocks.blocks() != s) throw Error(Errc::DimensionMismatch, "block grid size differs from partition");
    auto impl = std::make_shared<Impl>();
    impl->part = part;
    for (Index i = 0; i < s; ++i) {
      for (Index j = i; j < s; ++j) {
        const auto& b = blocks.at(i, j);
        if (!b) continue;
        if (b->rows() != part.dim(i) || b->cols() != part.dim(j))
          throw Error(Errc::DimensionMismatch,
                      "block (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ") has wrong shape",
                      static_cast<int>(i) + 1);
      }
    }
    impl->factors.resize(static_cast<std::size_t>(s));
    for (Index i = 0; i < s; ++i) {
      const auto& d = blocks.at(i, i);
      if (!d) throw Error(Errc::DiagonalNotPD, "diagonal block " + std::to_string(i + 1) + " is zero", static_cast<int>(i) + 1);
      const double nrm = d->norm();
      if ((*d - d->transpose()).norm() > kSymmetryTol * nrm)
        throw Error(Errc::NotSymmetric, "diagonal block " + std::to_string(i + 1) + " is not symmetric",
                    static_cast<int>(i) + 1);
      Eigen::LLT<Mat> llt(*d);
      if (llt.info() != Eigen::Success)
        throw Error(Errc::DiagonalNotPD, "diagonal block " + std::to_string(i + 1) + " is not positive definite",
                    static_cast<int>(i) + 1);
      impl->factors[static_cast<std::size_t>(i)] = std::move(llt);
    }
    impl->blocks = std::move(blocks);
    BlockSymOperator op;
    op.impl_ = std::move(impl);
    return op;
  }

  /// Takes the upper block triangle of a dense symmetric matrix; blocks that
  /// are exactly zero are dropped.
  static BlockSymOperator from_dense(const BlockPartition& part, const Mat& q) {
    if (q.rows() != part.total() || q.cols() != part.total())
      throw Error(Errc::DimensionMismatch, "dense matrix does not match partition");
    UpperBlocks ub(part.blocks());
    for (Index i = 0; i < part.blocks(); ++i)
      for (Index j = i; j < part.blocks(); ++j) {
        Mat b = q.block(part.offset(i), part.offset(j), part.dim(i), part.dim(j));
        if (i == j || !b.isZero(0.0)) ub.set(i, j, std::move(b));
      }
    return assemble(part, std::move(ub));
  }

  const BlockPartition& partition() const { return impl_->part; }
  Index blocks() const { return impl_->part.blocks(); }
  Index size() const { return impl_->part.total(); }

  /// Stored upper block, or nullptr for a structural zero. Requires i <= j.
  const Mat* upper(Index i, Index j) const {
    const auto& b = impl_->blocks.at(i, j);
    return b ? &*b : nullptr;
  }
  const UpperBlocks& upper_blocks() const { return impl_->blocks; }

  /// Q_{i,j} for any i, j (lower blocks are transposed views).
  Mat block(Index i, Index j) const {
    const auto& p = partition();
    if (i <= j) {
      const Mat* b = upper(i, j);
      return b ? *b : Mat::Zero(p.dim(i), p.dim(j));
    }
    const Mat* b = upper(j, i);
    return b ? Mat(b->transpose()) : Mat::Zero(p.dim(i), p.dim(j));
  }

  const Mat& diag(Index i) const { return *impl_->blocks.at(i, i); }
  const Eigen::LLT<Mat>& diag_factor(Index i) const { return impl_->factors[static_cast<std::size_t>(i)]; }
  Vec diag_solve(Index i, const Vec& rhs) const { return diag_factor(i).solve(rhs); }

  /// sum_{j>i} Q_{i,j} x_j
  Vec row_upper(Index i, const Vec& x) const {
    const auto& p = partition();
    Vec r = Vec::Zero(p.dim(i));
    for (Index j = i + 1; j < p.blocks(); ++j)
      if (const Mat* b = upper(i, j)) r.noalias() += *b * x.segment(p.offset(j), p.dim(j));
    return r;
  }

  /// sum_{j<i} Q_{j,i}^T x_j
  Vec row_lower(Index i, const Vec& x) const {
    const auto& p = partition();
    Vec r = Vec::Zero(p.dim(i));
    for (Index j = 0; j < i; ++j)
      if (const Mat* b = upper(j, i)) r.noalias() += b->transpose() * x.segment(p.offset(j), p.dim(j));
    return r;
  }

  Vec apply(const Vec& x) const {
    if (x.size() != size()) throw Error(Errc::DimensionMismatch, "operand length does not match operator");
    const auto& p = partition();
    Vec y = Vec::Zero(size());
    for (Index i = 0; i < p.blocks(); ++i) {
      auto yi = y.segment(p.offset(i), p.dim(i));
      yi.noalias() += diag(i) * x.segment(p.offset(i), p.dim(i));
      for (Index j = i + 1; j < p.blocks(); ++j) {
        const Mat* b = upper(i, j);
        if (!b) continue;
        yi.noalias() += *b * x.segment(p.offset(j), p.dim(j));
        y.segment(p.offset(j), p.dim(j)).noalias() += b->transpose() * x.segment(p.offset(i), p.dim(i));
      }
    }
    return y;
  }

  BlockVector apply(const BlockVector& x) const {
    require_same_partition(partition(), x.partition(), "operand partition does not match operator");
    return BlockVector(partition(), apply(x.data()));
  }

  /// U x (strict upper block triangle).
  Vec apply_upper(const Vec& x) const {
    const auto& p = partition();
    Vec y(size());
    for (Index i = 0; i < p.blocks(); ++i) y.segment(p.offset(i), p.dim(i)) = row_upper(i, x);
    return y;
  }

  /// U* x (strict lower block triangle).
  Vec apply_upper_adjoint(const Vec& x) const {
    const auto& p = partition();
    Vec y(size());
    for (Index i = 0; i < p.blocks(); ++i) y.segment(p.offset(i), p.dim(i)) = row_lower(i, x);
    return y;
  }

  /// D x
  Vec apply_diag(const Vec& x) const {
    const auto& p = partition();
    Vec y(size());
    for (Index i = 0; i < p.blocks(); ++i)
      y.segment(p.offset(i), p.dim(i)).noalias() = diag(i) * x.segment(p.offset(i), p.dim(i));
    return y;
  }

  /// D^{-1} x
  Vec solve_diag(const Vec& x) const {
    const auto& p = partition();
    Vec y(size());
    for (Index i = 0; i < p.blocks(); ++i)
      y.segment(p.offset(i), p.dim(i)) = diag_solve(i, x.segment(p.offset(i), p.dim(i)));
    return y;
  }

  Mat densify() const {
    const auto& p = partition();
    Mat q = Mat::Zero(size(), size());
    for (Index i = 0; i < p.blocks(); ++i)
      for (Index j = i; j < p.blocks(); ++j) {
        const Mat* b = upper(i, j);
        if (!b) continue;
        q.block(p.offset(i), p.offset(j), p.dim(i), p.dim(j)) = *b;
        if (i != j) q.block(p.offset(j), p.offset(i), p.dim(j), p.dim(i)) = b->transpose();
      }
    return q;
  }

  Mat dense_diag() const {
    const auto& p = partition();
    Mat d = Mat::Zero(size(), size());
    for (Index i = 0; i < p.blocks(); ++i) d.block(p.offset(i), p.offset(i), p.dim(i), p.dim(i)) = diag(i);
    return d;
  }

  Mat dense_upper() const {
    const auto& p = partition();
    Mat u = Mat::Zero(size(), size());
    for (Index i = 0; i < p.blocks(); ++i)
      for (Index j = i + 1; j < p.blocks(); ++j)
        if (const Mat* b = upper(i, j)) u.block(p.offset(i), p.offset(j), p.dim(i), p.dim(j)) = *b;
    return u;
  }

  /// Extreme eigenvalues of the assembled matrix (dense; desk scale only).
  std::pair<double, double> eigen_range() const {
    Eigen::SelfAdjointEigenSolver<Mat> es(densify(), Eigen::EigenvaluesOnly);
    return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
  }

  /// PSD check on demand: lambda_min >= -1e-10 * ||Q||_2.
  bool is_psd() const {
    auto [lo, hi] = eigen_range();
    return lo >= -kPsdTol * std::max(std::abs(hi), std::abs(lo));
  }

 private:
  struct Impl {
    BlockPartition part;
    UpperBlocks blocks;
    std::vector<Eigen::LLT<Mat>> factors;
  };
  std::shared_ptr<const Impl> impl_;
};

}  // namespace sgsqp
