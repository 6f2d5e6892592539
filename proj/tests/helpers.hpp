#pragma once

#include <random>
#include <string>

#include "sgsqp/sgsqp.hpp"

namespace sgsqp::testing {

inline BlockPartition two_by_two() { return BlockPartition({1, 1}); }

/// Q = [[2,1],[1,2]], b = [1,1]
inline BlockSymOperator running_q() {
  Mat q(2, 2);
  q << 2, 1, 1, 2;
  return BlockSymOperator::from_dense(two_by_two(), q);
}

inline CompositeQP running_problem(ProxSpec p = ProxSpec::zero()) {
  return CompositeQP(running_q(), BlockVector(two_by_two(), Vec::Ones(2)), p);
}

inline BlockVector bv(const BlockPartition& part, std::initializer_list<double> vals) {
  Vec v(static_cast<Index>(vals.size()));
  Index i = 0;
  for (double x : vals) v(i++) = x;
  return BlockVector(part, v);
}

inline std::vector<Index> random_dims(std::mt19937_64& rng, Index s, Index max_dim) {
  std::uniform_int_distribution<Index> d(1, max_dim);
  std::vector<Index> dims;
  for (Index i = 0; i < s; ++i) dims.push_back(d(rng));
  return dims;
}

/// Seeded random problem; a nonsmooth p gets Q_11 = mu I or the conservative shift.
inline CompositeQP random_problem(std::uint64_t seed, Index s, Index max_dim, const std::string& prox = "zero",
                                  bool singular = false, bool q11_identity = false, double kappa = 100.0) {
  std::mt19937_64 rng(seed * 7919 + 13);
  GenParams gp;
  gp.dims = random_dims(rng, s, max_dim);
  gp.seed = seed;
  gp.prox = prox;
  gp.singular = singular;
  gp.q11_identity = q11_identity;
  gp.kappa = kappa;
  gp.density = 0.8;
  return generate(gp).problem();
}

inline Vec random_vec(std::mt19937_64& rng, Index n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

inline double rel_err(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(1.0, b.norm()); }
inline double rel_err(const Mat& a, const Mat& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

/// Dense independent formulas: (tau D + U)(rho D)^{-1}(tau D + U*) and
/// ((1 - tau) D + U)(rho D)^{-1}((1 - tau) D + U*), from explicit blocks.
inline Mat dense_qhat_formula(const Mat& q, const BlockPartition& part, double omega) {
  const double tau = 1.0 / omega, rho = 2.0 * tau - 1.0;
  Mat d = Mat::Zero(q.rows(), q.cols()), u = Mat::Zero(q.rows(), q.cols());
  for (Index i = 0; i < part.blocks(); ++i)
    for (Index j = i; j < part.blocks(); ++j) {
      auto blk = q.block(part.offset(i), part.offset(j), part.dim(i), part.dim(j));
      if (i == j) d.block(part.offset(i), part.offset(j), part.dim(i), part.dim(j)) = blk;
      else u.block(part.offset(i), part.offset(j), part.dim(i), part.dim(j)) = blk;
    }
  Mat l = tau * d + u;
  return l * (rho * d).inverse() * l.transpose();
}

inline Mat dense_t_formula(const Mat& q, const BlockPartition& part, double omega) {
  const double tau = 1.0 / omega, rho = 2.0 * tau - 1.0;
  Mat d = Mat::Zero(q.rows(), q.cols()), u = Mat::Zero(q.rows(), q.cols());
  for (Index i = 0; i < part.blocks(); ++i)
    for (Index j = i; j < part.blocks(); ++j) {
      auto blk = q.block(part.offset(i), part.offset(j), part.dim(i), part.dim(j));
      if (i == j) d.block(part.offset(i), part.offset(j), part.dim(i), part.dim(j)) = blk;
      else u.block(part.offset(i), part.offset(j), part.dim(i), part.dim(j)) = blk;
    }
  Mat l = (1.0 - tau) * d + u;
  return l * (rho * d).inverse() * l.transpose();
}

}  // namespace sgsqp::testing
