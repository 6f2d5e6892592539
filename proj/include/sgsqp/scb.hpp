#pragma once

// Schur-complement-based (SCB) reduction, built densely for certification.
//
// For j = 2..s, with R_j = [Q_{1,j}; ...; Q_{j-1,j}]:
//   Ohat_j = R_j Q_jj^{-1} R_j^*                       (N_{j-1} x N_{j-1})
//   O_j    = diag(O_{j-1}, 0) + diag(Ohat_j, 0)         (N_j x N_j), O_1 = 0
//   Vhat_j = [I  R_j Q_jj^{-1}; 0  I]                   (N_j x N_j)
// The proximal weight Theta_j of the elimination step is identified with O_j.

#include <string>
#include <vector>

#include "sgsqp/oracle.hpp"

namespace sgsqp::scb {

struct ScbFactors {
  BlockPartition partition;
  std::vector<Mat> O;     // O[j] for j = 0..s-1 (block count j+1), O[0] = 0
  std::vector<Mat> Vhat;  // Vhat[j] for j = 1..s-1; Vhat[0] empty
  std::vector<Mat> R;     // R[j] = [Q_{1,j}; ...; Q_{j-1,j}], R[0] empty
  std::vector<Mat> Ohat;  // Ohat[j], Ohat[0] empty

  /// V_j = diag(Vhat_j, I_{N - N_j}) (N x N).
  Mat V(Index j) const {
    const Index n = partition.total(), nj = partition.leading(j + 1);
    Mat v = Mat::Identity(n, n);
    v.topLeftCorner(nj, nj) = Vhat[static_cast<std::size_t>(j)];
    return v;
  }
};

inline double rel_frobenius(const Mat& a, const Mat& b) {
  const double nb = b.norm();
  const double d = (a - b).norm();
  if (nb == 0.0) return d;
  return d / nb;
}

inline ScbFactors build_factors(const BlockSymOperator& q) {
  const auto& part = q.partition();
  const Index s = part.blocks();
  ScbFactors f;
  f.partition = part;
  f.O.resize(static_cast<std::size_t>(s));
  f.Vhat.resize(static_cast<std::size_t>(s));
  f.R.resize(static_cast<std::size_t>(s));
  f.Ohat.resize(static_cast<std::size_t>(s));
  f.O[0] = Mat::Zero(part.dim(0), part.dim(0));
  for (Index j = 1; j < s; ++j) {
    const Index nprev = part.leading(j), nj = part.dim(j);
    Mat r(nprev, nj);
    for (Index i = 0; i < j; ++i) r.middleRows(part.offset(i), part.dim(i)) = q.block(i, j);
    Mat rqinv = q.diag_factor(j).solve(r.transpose()).transpose();  // R_j Q_jj^{-1}
    Mat ohat = rqinv * r.transpose();
    ohat = 0.5 * (ohat + ohat.transpose());
    Mat o = Mat::Zero(nprev + nj, nprev + nj);
    o.topLeftCorner(nprev, nprev) = f.O[static_cast<std::size_t>(j - 1)] + ohat;
    Mat v = Mat::Identity(nprev + nj, nprev + nj);
    v.topRightCorner(nprev, nj) = rqinv;
    f.R[static_cast<std::size_t>(j)] = std::move(r);
    f.Ohat[static_cast<std::size_t>(j)] = std::move(ohat);
    f.O[static_cast<std::size_t>(j)] = std::move(o);
    f.Vhat[static_cast<std::size_t>(j)] = std::move(v);
  }
  return f;
}

/// O_j recomputed directly from its defining sum (no recursion).
inline Mat direct_O(const BlockSymOperator& q, Index j) {
  const auto& part = q.partition();
  const Index nj = part.leading(j + 1);
  Mat o = Mat::Zero(nj, nj);
  for (Index k = 1; k <= j; ++k) {
    Mat col = Mat::Zero(nj, part.dim(k));
    for (Index i = 0; i < k; ++i) col.middleRows(part.offset(i), part.dim(i)) = q.block(i, k);
    o += col * q.diag_factor(k).solve(col.transpose());
  }
  return o;
}

/// Q_j, the leading j x j block principal submatrix.
inline Mat leading_Q(const BlockSymOperator& q, Index j) {
  const Index nj = q.partition().leading(j + 1);
  return q.densify().topLeftCorner(nj, nj);
}

struct IdentityReport {
  double product_identity = 0.0;    // ||V_2^*...V_s^* - D^{-1}(D + U^*)|| / ||D^{-1}(D + U^*)||
  double factorization = 0.0;    // ||(Q + O_s) - V_s...V_2 D V_2^*...V_s^*|| / ||Q + O_s||
  double O_vs_T = 0.0;           // ||O_s - T_Q|| / ||T_Q||
  double recursion = 0.0;        // max_j ||O_j - direct sum|| / ||O_j||
  double schur = 0.0;            // max_j ||Q_j - Vhat_j diag(M_{j-1}, Q_jj) Vhat_j^*|| / ||Q_j||
  static constexpr double kThreshold = 1e-11;

  bool ok() const {
    return product_identity <= kThreshold && factorization <= kThreshold && O_vs_T <= kThreshold &&
           recursion <= kThreshold && schur <= kThreshold;
  }
};

inline IdentityReport identity_errors(const BlockSymOperator& q) {
  const auto& part = q.partition();
  const Index s = part.blocks(), n = part.total();
  ScbFactors f = build_factors(q);
  IdentityReport rep;

  Mat d = q.dense_diag(), u = q.dense_upper(), qd = q.densify();
  Mat prod_adj = Mat::Identity(n, n);  // V_2^* ... V_s^*
  for (Index j = 1; j < s; ++j) prod_adj = prod_adj * f.V(j).transpose();
  Mat product_rhs = d.inverse() * (d + u.transpose());
  rep.product_identity = rel_frobenius(prod_adj, product_rhs);

  Mat fact = prod_adj.transpose() * d * prod_adj;
  rep.factorization = rel_frobenius(fact, qd + f.O[static_cast<std::size_t>(s - 1)]);

  Mat t = u * d.inverse() * u.transpose();
  rep.O_vs_T = rel_frobenius(f.O[static_cast<std::size_t>(s - 1)], t);

  for (Index j = 1; j < s; ++j) {
    rep.recursion = std::max(rep.recursion, rel_frobenius(f.O[static_cast<std::size_t>(j)], direct_O(q, j)));
    const Index nprev = part.leading(j), nj = part.dim(j);
    Mat qj = leading_Q(q, j);
    Mat m = leading_Q(q, j - 1) - f.Ohat[static_cast<std::size_t>(j)];
    Mat mid = Mat::Zero(nprev + nj, nprev + nj);
    mid.topLeftCorner(nprev, nprev) = m;
    mid.bottomRightCorner(nj, nj) = q.diag(j);
    const Mat& vh = f.Vhat[static_cast<std::size_t>(j)];
    rep.schur = std::max(rep.schur, rel_frobenius(vh * mid * vh.transpose(), qj));
  }
  return rep;
}

/// Throws IdentityViolation when any identity error exceeds 1e-11.
inline IdentityReport verify_identities(const BlockSymOperator& q) {
  IdentityReport rep = identity_errors(q);
  if (!rep.ok()) {
    const double worst = std::max({rep.product_identity, rep.factorization, rep.O_vs_T, rep.recursion, rep.schur});
    throw Error(Errc::IdentityViolation, "SCB identity error " + std::to_string(worst) + " exceeds 1e-11");
  }
  return rep;
}

/// Sequential elimination of x_s..x_2 with proximal weights O_j, the x_1
/// solve, then back-substitution x_j = Q_jj^{-1}(b_j - R_j^* x_{<=j-1}).
/// Returns the minimizer of the sGS proximal subproblem with Delta = 0.
inline BlockVector scb_eliminate(const CompositeQP& prob, const BlockVector& xbar) {
  const auto& q = prob.Q();
  const auto& part = prob.partition();
  const Index s = part.blocks();
  if (!prob.shifts().empty())
    for (const Mat& j : prob.shifts())
      if (!j.isZero(0.0)) throw Error(Errc::InvalidParams, "SCB elimination does not support proximal shifts");
  ScbFactors f = build_factors(q);
  const Vec& xb = xbar.data();
  // reduced linear terms: after eliminating x_s..x_{j+1} the problem in
  // x_{<=j} has linear term b_red(0:N_j)
  Vec b_red = prob.b().data();
  std::vector<Vec> xprime(static_cast<std::size_t>(s));
  for (Index j = s - 1; j >= 1; --j) {
    const Index nprev = part.leading(j);
    const Mat& r = f.R[static_cast<std::size_t>(j)];
    Vec bj = b_red.segment(part.offset(j), part.dim(j));
    Vec xj = q.diag_solve(j, bj - r.transpose() * xb.head(nprev));
    b_red.head(nprev) -= r * xj;
    xprime[static_cast<std::size_t>(j)] = std::move(xj);
  }
  Vec x(part.total());
  Block1Solution s1 = solve_block1(prob.p(), q.diag(0), b_red.head(part.dim(0)));
  x.head(part.dim(0)) = s1.x;
  for (Index j = 1; j < s; ++j) {
    const Index nprev = part.leading(j);
    const Mat& r = f.R[static_cast<std::size_t>(j)];
    Vec bj = b_red.segment(part.offset(j), part.dim(j));
    // b_red_j already carries -sum_{i>j} Q_ji x'_i
    x.segment(part.offset(j), part.dim(j)) = q.diag_solve(j, bj - r.transpose() * x.head(nprev));
  }
  return BlockVector(part, x);
}

}  // namespace sgsqp::scb
