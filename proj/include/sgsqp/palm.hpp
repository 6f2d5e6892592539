#pragma once

// Proximal ALM for min p(x_1) + 1/2 <x, P x> - <g, x> s.t. A x = d, with the
// x-subproblem solved by one sGS cycle on Q = P + sigma A^* A, and the QSDP
// instance of it.

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sgsqp/apg.hpp"

namespace sgsqp {

struct LinConQP {
  BlockPartition partition;
  Mat P;  // N x N symmetric PSD; diagonal blocks may be singular
  Mat A;  // m x N
  BlockVector g;
  Vec d;  // m
  ProxSpec p;

  void validate() const {
    const Index n = partition.total();
    if (P.rows() != n || P.cols() != n) throw Error(Errc::DimensionMismatch, "P does not match the partition");
    if (A.cols() != n) throw Error(Errc::DimensionMismatch, "A does not match the partition");
    if (d.size() != A.rows()) throw Error(Errc::DimensionMismatch, "d does not match the rows of A");
    require_same_partition(partition, g.partition(), "g does not match the partition");
    if ((P - P.transpose()).norm() > kSymmetryTol * std::max(1.0, P.norm()))
      throw Error(Errc::NotSymmetric, "P is not symmetric");
    p.validate(partition.dim(0));
  }
};

/// Q = P + sigma A^* A, symmetrized; throws DiagonalNotPD when a diagonal block is singular.
inline BlockSymOperator penalized_operator(const LinConQP& lp, double sigma) {
  Mat q = lp.P + sigma * lp.A.transpose() * lp.A;
  q = 0.5 * (q + q.transpose());
  return BlockSymOperator::from_dense(lp.partition, q);
}

/// b = g + A^*(sigma d - y)
inline BlockVector penalized_rhs(const LinConQP& lp, double sigma, const Vec& y) {
  return BlockVector(lp.partition, lp.g.data() + lp.A.transpose() * (sigma * lp.d - y));
}

/// L_sigma(x; y) = p(x_1) + 1/2 <x, P x> - <g, x> + sigma/2 ||A x - d + y/sigma||^2 - ||y||^2 / (2 sigma)
inline double lagrangian(const LinConQP& lp, double sigma, const Vec& x, const Vec& y) {
  const double pv = lp.p.value(x.head(lp.partition.dim(0)));
  Vec r = lp.A * x - lp.d + y / sigma;
  return pv + 0.5 * x.dot(lp.P * x) - lp.g.data().dot(x) + 0.5 * sigma * r.squaredNorm() - y.squaredNorm() / (2.0 * sigma);
}

/// Same value through the subproblem form p(x_1) + 1/2 <x, Q x> - <b, x> + const.
inline double lagrangian_expanded(const LinConQP& lp, double sigma, const Vec& x, const Vec& y) {
  const double pv = lp.p.value(x.head(lp.partition.dim(0)));
  Vec qx = lp.P * x + sigma * (lp.A.transpose() * (lp.A * x));
  const Vec b = penalized_rhs(lp, sigma, y).data();
  const double c = 0.5 * sigma * lp.d.squaredNorm() - lp.d.dot(y);
  return pv + 0.5 * x.dot(qx) - b.dot(x) + c;
}

inline double lincon_objective(const LinConQP& lp, const Vec& x) {
  const double pv = lp.p.value(x.head(lp.partition.dim(0)));
  if (!std::isfinite(pv)) return pv;
  return pv + 0.5 * x.dot(lp.P * x) - lp.g.data().dot(x);
}

/// dist(g - P x - A^* y, dp(x_1) x {0})
inline double lincon_kkt(const LinConQP& lp, const Vec& x, const Vec& y) {
  const Index n1 = lp.partition.dim(0);
  Vec grad = lp.g.data() - lp.P * x - lp.A.transpose() * y;
  const double r1 = subgrad_residual(lp.p, x.head(n1), grad.head(n1));
  if (!std::isfinite(r1)) return r1;
  return std::sqrt(r1 * r1 + grad.tail(grad.size() - n1).squaredNorm());
}

struct PalmOptions {
  double tol = 1e-8;  // on both ||A x - d|| and the KKT residual
  int max_iter = 10000;
  /// Step 2 with the previous iterate x^k instead of the fresh x^{k+1}.
  bool multiplier_uses_previous = false;
  InnerSolve inner = InnerSolve::exact();
  bool record_time = true;
  /// Explicit shifts; when empty and p is nonsmooth with Q_11 != mu I, the
  /// conservative block-1 shift is used.
  std::vector<Mat> shifts;
};

struct PalmRow {
  int k = 0;
  double F = 0.0;
  double primal_inf = 0.0;
  double kkt = 0.0;
  double y_norm = 0.0;
  double time_s = 0.0;
};

struct PalmResult {
  BlockVector x;
  Vec y;
  std::vector<PalmRow> rows;
  Termination termination = Termination::MaxIter;
  bool shifted = false;
};

inline PalmResult palm_solve(const LinConQP& lp, double sigma, double tau, const BlockVector& x0, const Vec& y0,
                             const PalmOptions& opts = {}) {
  lp.validate();
  if (!(sigma > 0.0)) throw Error(Errc::InvalidParams, "sigma must be positive");
  if (!(tau > 0.0 && tau < 2.0)) throw Error(Errc::TauOutOfRange, "tau must lie in (0, 2)");
  require_same_partition(lp.partition, x0.partition(), "x0 does not match the problem");
  if (y0.size() != lp.A.rows()) throw Error(Errc::DimensionMismatch, "y0 does not match the rows of A");

  const auto clock_start = std::chrono::steady_clock::now();
  BlockSymOperator q = penalized_operator(lp, sigma);
  std::vector<Mat> shifts = opts.shifts;
  if (shifts.empty() && !lp.p.is_zero() && !identity_multiple(q.diag(0))) shifts = conservative_shifts(q, {0});
  Vec y = y0;
  CompositeQP base(q, penalized_rhs(lp, sigma, y), lp.p, shifts);

  PalmResult out;
  out.shifted = !shifts.empty();
  BlockVector x = x0;
  CycleOptions copt;
  copt.inner = opts.inner;
  for (int k = 1; k <= opts.max_iter; ++k) {
    CompositeQP sub = base.with_b(penalized_rhs(lp, sigma, y));
    CycleResult cr = sgs_cycle(sub, x, copt);
    const Vec& xm = opts.multiplier_uses_previous ? x.data() : cr.x_plus.data();
    y += tau * sigma * (lp.A * xm - lp.d);
    x = cr.x_plus;

    PalmRow row;
    row.k = k;
    row.F = lincon_objective(lp, x.data());
    row.primal_inf = (lp.A * x.data() - lp.d).norm();
    row.kkt = lincon_kkt(lp, x.data(), y);
    row.y_norm = y.norm();
    if (opts.record_time)
      row.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    out.rows.push_back(row);
    if (row.primal_inf <= opts.tol && row.kkt <= opts.tol) {
      out.termination = Termination::Tol;
      break;
    }
  }
  out.x = x;
  out.y = y;
  return out;
}

// ---- QSDP ----------------------------------------------------------------
//
// min 1/2 <W, H W> - <h, xi>  s.t.  Z + B^* xi + H W = C,  Z PSD,  W in Range(H)
//
// Symmetric matrices are handled in svec coordinates (m = n(n+1)/2), so H is
// an m x m symmetric PSD matrix and B a p x m matrix. With H = V diag(lam) V^T
// restricted to its range, W = V w and H W = V diag(lam) w.

struct QsdpData {
  Index n = 0;
  Mat H;  // m x m
  Mat B;  // p x m
  Vec h;  // p
  Mat C;  // n x n symmetric

  Index m() const { return svec_size(n); }
  Index p() const { return B.rows(); }

  void validate() const {
    const Index mm = m();
    if (n < 1) throw Error(Errc::InvalidParams, "QSDP needs n >= 1");
    if (H.rows() != mm || H.cols() != mm) throw Error(Errc::ShapeMismatch, "H must act on svec coordinates");
    if (B.cols() != mm || B.rows() < 1) throw Error(Errc::ShapeMismatch, "B must map svec coordinates to R^p");
    if (h.size() != B.rows()) throw Error(Errc::ShapeMismatch, "h does not match B");
    if (C.rows() != n || C.cols() != n) throw Error(Errc::ShapeMismatch, "C must be n x n");
    if ((H - H.transpose()).norm() > 1e-12 * std::max(1.0, H.norm())) throw Error(Errc::NotSymmetric, "H is not symmetric");
    if ((C - C.transpose()).norm() > 1e-12 * std::max(1.0, C.norm())) throw Error(Errc::NotSymmetric, "C is not symmetric");
    Eigen::LLT<Mat> bb(B * B.transpose());
    if (bb.info() != Eigen::Success) throw Error(Errc::NotPD, "B B^* is singular");
  }
};

/// Orthonormal basis of Range(H) and the matching eigenvalues.
struct RangeBasis {
  Mat V;    // m x r
  Vec lam;  // r, positive
};

inline RangeBasis range_basis(const Mat& h) {
  oracle::EigenData e = oracle::eig(h);
  const double hn = e.values.cwiseAbs().maxCoeff();
  if (!std::isfinite(hn)) throw Error(Errc::RangeDeficiency, "H has non-finite eigenvalues");
  if (e.values.size() && e.values(0) < -1e-10 * std::max(1.0, hn)) throw Error(Errc::NotPSD, "H is not PSD");
  const double cut = 1e-12 * hn;
  std::vector<Index> keep;
  for (Index i = 0; i < e.values.size(); ++i)
    if (e.values(i) > cut) keep.push_back(i);
  RangeBasis rb;
  rb.V.resize(h.rows(), static_cast<Index>(keep.size()));
  rb.lam.resize(static_cast<Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    rb.V.col(static_cast<Index>(c)) = e.vectors.col(keep[c]);
    rb.lam(static_cast<Index>(c)) = e.values(keep[c]);
  }
  if (rb.V.cols() && (rb.V.transpose() * rb.V - Mat::Identity(rb.V.cols(), rb.V.cols())).norm() > 1e-8)
    throw Error(Errc::RangeDeficiency, "Range(H) basis is not orthonormal");
  return rb;
}

/// The QSDP as a LinConQP in variables (svec Z; xi; w); blocks (Z, xi) only when H = 0.
inline LinConQP qsdp_lincon(const QsdpData& qd, const RangeBasis& rb) {
  qd.validate();
  const Index mm = qd.m(), pp = qd.p(), r = rb.V.cols();
  std::vector<Index> dims{mm, pp};
  if (r > 0) dims.push_back(r);
  LinConQP lp;
  lp.partition = BlockPartition(dims);
  const Index n = lp.partition.total();
  lp.P = Mat::Zero(n, n);
  if (r > 0) lp.P.bottomRightCorner(r, r) = rb.lam.asDiagonal();
  lp.A.resize(mm, n);
  lp.A.leftCols(mm) = Mat::Identity(mm, mm);
  lp.A.middleCols(mm, pp) = qd.B.transpose();
  if (r > 0) lp.A.rightCols(r) = rb.V * rb.lam.asDiagonal();
  Vec g = Vec::Zero(n);
  g.segment(mm, pp) = qd.h;
  lp.g = BlockVector(lp.partition, g);
  lp.d = svec(qd.C);
  lp.p = ProxSpec::psd_cone(qd.n);
  return lp;
}

inline LinConQP qsdp_lincon(const QsdpData& qd) { return qsdp_lincon(qd, range_basis(qd.H)); }

struct QsdpSubproblem {
  CompositeQP problem;
  RangeBasis range;
};

/// Step-1 subproblem for multiplier Y (svec), assembled block by block:
///   Q = sigma [[I, B^*, V L], [B, B B^*, B V L], [L V^T, L V^T B^*, L/sigma + L^2]]
///   b = (sigma C - Y;  h + B(sigma C - Y);  L V^T (sigma C - Y))
inline QsdpSubproblem qsdp_assemble(const QsdpData& qd, double sigma, const Vec& Y) {
  qd.validate();
  if (!(sigma > 0.0)) throw Error(Errc::InvalidParams, "sigma must be positive");
  if (Y.size() != qd.m()) throw Error(Errc::ShapeMismatch, "Y must be in svec coordinates");
  RangeBasis rb = range_basis(qd.H);
  const Index mm = qd.m(), pp = qd.p(), r = rb.V.cols();
  std::vector<Index> dims{mm, pp};
  if (r > 0) dims.push_back(r);
  BlockPartition part(dims);
  UpperBlocks ub(part.blocks());
  const Mat& B = qd.B;
  ub.set(0, 0, sigma * Mat::Identity(mm, mm));
  ub.set(0, 1, sigma * B.transpose());
  Mat bbt = sigma * B * B.transpose();
  ub.set(1, 1, 0.5 * (bbt + bbt.transpose()));
  Mat vl = rb.V * rb.lam.asDiagonal();
  if (r > 0) {
    ub.set(0, 2, sigma * vl);
    ub.set(1, 2, sigma * B * vl);
    Vec d33 = rb.lam + sigma * rb.lam.cwiseProduct(rb.lam);
    ub.set(2, 2, Mat(d33.asDiagonal()));
  }
  BlockSymOperator q = BlockSymOperator::assemble(part, std::move(ub));
  Vec bz = sigma * svec(qd.C) - Y;
  Vec b(part.total());
  b.head(mm) = bz;
  b.segment(mm, pp) = qd.h + B * bz;
  if (r > 0) b.tail(r) = vl.transpose() * bz;
  BlockVector bv(part, b);
  bv.set_shape(0, BlockShape{qd.n, qd.n, true});
  return {CompositeQP(q, bv, ProxSpec::psd_cone(qd.n)), rb};
}

struct QsdpState {
  Vec Z;   // svec
  Vec xi;  // p
  Vec HW;  // svec
};

/// Steps 1a-1e: one exact sGS cycle expressed through H W only.
inline QsdpState qsdp_sgs_step(const QsdpData& qd, double sigma, const QsdpState& st, const Vec& Y) {
  qd.validate();
  const Index mm = qd.m();
  if (st.Z.size() != mm || st.HW.size() != mm || st.xi.size() != qd.p() || Y.size() != mm)
    throw Error(Errc::ShapeMismatch, "QSDP state has inconsistent shapes");
  const Mat& H = qd.H;
  const Mat& B = qd.B;
  const bool has_w = range_basis(H).V.cols() > 0;
  Eigen::LLT<Mat> bbt(B * B.transpose());
  if (bbt.info() != Eigen::Success) throw Error(Errc::NotPD, "B B^* is singular");
  // (I/sigma + H) is PD for H PSD
  Eigen::LLT<Mat> hs(Mat(Mat::Identity(mm, mm) / sigma + H));
  if (hs.info() != Eigen::Success) throw Error(Errc::NotPD, "I/sigma + H is not positive definite");

  const Vec bz = sigma * svec(qd.C) - Y;
  const Vec bw = H * bz;
  const Vec bxi = qd.h + B * bz;
  QsdpState out;
  // 1a
  Vec hw1 = Vec::Zero(mm);
  if (has_w) hw1 = hs.solve(Vec(bw / sigma - H * st.Z - H * (B.transpose() * st.xi)));
  // 1b
  Vec xi1 = bbt.solve(Vec(bxi / sigma - B * st.Z - B * hw1));
  // 1c
  Vec target = bz / sigma - B.transpose() * xi1 - hw1;
  out.Z = svec(project_psd(smat(target, qd.n)));
  // 1d
  out.xi = bbt.solve(Vec(bxi / sigma - B * out.Z - B * hw1));
  // 1e
  out.HW = Vec::Zero(mm);
  if (has_w) out.HW = hs.solve(Vec(bw / sigma - H * out.Z - H * (B.transpose() * out.xi)));
  return out;
}

/// Packs (Z, xi, HW) into the assembled variable (svec Z; xi; w), w = L^{-1} V^T H W.
inline BlockVector qsdp_pack(const QsdpSubproblem& sp, const QsdpState& st) {
  const auto& part = sp.problem.partition();
  Vec x(part.total());
  x.head(st.Z.size()) = st.Z;
  x.segment(st.Z.size(), st.xi.size()) = st.xi;
  const Index r = sp.range.V.cols();
  if (r > 0) x.tail(r) = (sp.range.V.transpose() * st.HW).cwiseQuotient(sp.range.lam);
  return BlockVector(part, x);
}

inline QsdpState qsdp_unpack(const QsdpSubproblem& sp, const BlockVector& x) {
  const auto& part = sp.problem.partition();
  QsdpState st;
  st.Z = x.block(0);
  st.xi = x.block(1);
  const Index r = sp.range.V.cols();
  st.HW = r > 0 ? Vec(sp.range.V * sp.range.lam.cwiseProduct(x.block(2))) : Vec::Zero(part.dim(0));
  return st;
}

}  // namespace sgsqp
