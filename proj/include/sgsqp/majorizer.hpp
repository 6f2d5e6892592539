#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "sgsqp/block_operator.hpp"

namespace sgsqp {

enum class MajorizerKind { Sgs, Ssor, ShiftedSgs };

enum class Form { Q, T, Qhat, QhatInv };

/// Proximal weight T and surrogate Hessian Qhat = Q + T of one sweep cycle.
///
/// With a (possibly shifted) diagonal Dh = D + diag(J_1..J_s), tau = 1/omega
/// and rho = 2 tau - 1:
///
///   Qhat = (tau Dh + U) (rho Dh)^{-1} (tau Dh + U*)
///   T    = diag(J) + ((1 - tau) Dh + U) (rho Dh)^{-1} ((1 - tau) Dh + U*)
///
/// omega = 1 and J = 0 give the sGS operator T = U D^{-1} U*. Nothing here is
/// ever formed densely except through the `dense_*` test hooks.
class Majorizer {
 public:
  Majorizer() = default;

  Majorizer(BlockSymOperator q, double omega, std::vector<Mat> shifts = {}) : q_(std::move(q)) {
    if (!(omega >= 1.0 && omega < 2.0))
      throw Error(Errc::OmegaOutOfRange, "omega must lie in [1, 2), got " + std::to_string(omega));
    omega_ = omega;
    tau_ = 1.0 / omega;
    rho_ = 2.0 * tau_ - 1.0;
    const auto& p = q_.partition();
    if (!shifts.empty()) {
      if (static_cast<Index>(shifts.size()) != p.blocks())
        throw Error(Errc::DimensionMismatch, "one shift per block is required");
      bool any = false;
      for (Index i = 0; i < p.blocks(); ++i) {
        Mat& j = shifts[static_cast<std::size_t>(i)];
        if (j.size() == 0) j = Mat::Zero(p.dim(i), p.dim(i));
        if (j.rows() != p.dim(i) || j.cols() != p.dim(i))
          throw Error(Errc::DimensionMismatch, "shift has wrong shape", static_cast<int>(i) + 1);
        if (j.isZero(0.0)) continue;
        any = true;
        const double nrm = j.norm();
        if ((j - j.transpose()).norm() > kSymmetryTol * nrm)
          throw Error(Errc::ShiftNotPSD, "shift is not symmetric", static_cast<int>(i) + 1);
        Eigen::SelfAdjointEigenSolver<Mat> es(j, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -kPsdTol * es.eigenvalues().cwiseAbs().maxCoeff())
          throw Error(Errc::ShiftNotPSD, "shift is not positive semidefinite", static_cast<int>(i) + 1);
      }
      if (any) {
        shifts_ = std::make_shared<std::vector<Mat>>(std::move(shifts));
        auto f = std::make_shared<std::vector<Eigen::LLT<Mat>>>();
        for (Index i = 0; i < p.blocks(); ++i) {
          f->emplace_back(Mat(q_.diag(i) + (*shifts_)[static_cast<std::size_t>(i)]));
          if (f->back().info() != Eigen::Success)
            throw Error(Errc::DiagonalNotPD, "shifted diagonal block is not positive definite", static_cast<int>(i) + 1);
        }
        shifted_factors_ = std::move(f);
      }
    }
    kind_ = shifted() ? MajorizerKind::ShiftedSgs : (omega == 1.0 ? MajorizerKind::Sgs : MajorizerKind::Ssor);
  }

  const BlockSymOperator& base() const { return q_; }
  const BlockPartition& partition() const { return q_.partition(); }
  MajorizerKind kind() const { return kind_; }
  double omega() const { return omega_; }
  double tau() const { return tau_; }
  double rho() const { return rho_; }
  bool shifted() const { return static_cast<bool>(shifts_); }

  /// J_i (zero matrix when unshifted).
  Mat shift(Index i) const {
    if (!shifts_) return Mat::Zero(partition().dim(i), partition().dim(i));
    return (*shifts_)[static_cast<std::size_t>(i)];
  }

  /// Dh_i = Q_ii + J_i
  Mat dhat(Index i) const { return shifts_ ? Mat(q_.diag(i) + (*shifts_)[static_cast<std::size_t>(i)]) : q_.diag(i); }
  Vec dhat_apply(Index i, const Vec& x) const {
    Vec y = q_.diag(i) * x;
    if (shifts_) y.noalias() += (*shifts_)[static_cast<std::size_t>(i)] * x;
    return y;
  }
  Vec dhat_solve(Index i, const Vec& r) const {
    return shifted_factors_ ? (*shifted_factors_)[static_cast<std::size_t>(i)].solve(r) : q_.diag_solve(i, r);
  }
  const Eigen::LLT<Mat>& dhat_factor(Index i) const {
    return shifted_factors_ ? (*shifted_factors_)[static_cast<std::size_t>(i)] : q_.diag_factor(i);
  }
  Vec shift_apply(Index i, const Vec& x) const {
    return shifts_ ? Vec((*shifts_)[static_cast<std::size_t>(i)] * x) : Vec::Zero(x.size());
  }

  Vec apply_T(const Vec& x) const {
    check(x);
    const auto& p = partition();
    const double a = 1.0 - tau_;
    Vec v = q_.apply_upper_adjoint(x);
    if (a != 0.0) v += a * apply_dhat(x);
    Vec w = solve_dhat(v) / rho_;
    Vec y = q_.apply_upper(w);
    if (a != 0.0) y += a * apply_dhat(w);
    if (shifts_)
      for (Index i = 0; i < p.blocks(); ++i)
        y.segment(p.offset(i), p.dim(i)) += shift_apply(i, x.segment(p.offset(i), p.dim(i)));
    return y;
  }

  Vec apply_Qhat(const Vec& x) const {
    check(x);
    Vec v = tau_ * apply_dhat(x) + q_.apply_upper_adjoint(x);
    Vec w = solve_dhat(v) / rho_;
    return tau_ * apply_dhat(w) + q_.apply_upper(w);
  }

  /// (tau Dh + U)^{-1} r by block back substitution.
  Vec solve_upper(const Vec& r) const {
    const auto& p = partition();
    Vec z(r.size());
    for (Index i = p.blocks() - 1; i >= 0; --i) {
      Vec rhs = r.segment(p.offset(i), p.dim(i)) - q_.row_upper(i, z);
      z.segment(p.offset(i), p.dim(i)) = dhat_solve(i, rhs) / tau_;
    }
    return z;
  }

  /// (tau Dh + U*)^{-1} r by block forward substitution.
  Vec solve_lower(const Vec& r) const {
    const auto& p = partition();
    Vec z(r.size());
    for (Index i = 0; i < p.blocks(); ++i) {
      Vec rhs = r.segment(p.offset(i), p.dim(i)) - q_.row_lower(i, z);
      z.segment(p.offset(i), p.dim(i)) = dhat_solve(i, rhs) / tau_;
    }
    return z;
  }

  /// Qhat^{-1} r = (tau Dh + U*)^{-1} rho Dh (tau Dh + U)^{-1} r
  Vec solve_Qhat(const Vec& r) const {
    check(r);
    return solve_lower(rho_ * apply_dhat(solve_upper(r)));
  }

  /// ||Qhat^{-1/2} x|| = sqrt(rho <z, Dh z>), z = (tau Dh + U)^{-1} x.
  double qhat_inv_half_norm(const Vec& x) const {
    check(x);
    Vec z = solve_upper(x);
    return std::sqrt(std::max(0.0, rho_ * z.dot(apply_dhat(z))));
  }

  /// ||(rho Dh)^{-1/2} v||
  double dinv_half_norm(const Vec& v) const {
    check(v);
    return std::sqrt(std::max(0.0, v.dot(solve_dhat(v)) / rho_));
  }

  double quad_norm(const Vec& x, Form which) const {
    check(x);
    double val = 0.0;
    switch (which) {
      case Form::Q: val = x.dot(q_.apply(x)); break;
      case Form::T: val = x.dot(apply_T(x)); break;
      case Form::Qhat: val = x.dot(apply_Qhat(x)); break;
      case Form::QhatInv: return qhat_inv_half_norm(x);
    }
    const double scale = x.squaredNorm() * std::max(1.0, std::abs(val) / std::max(x.squaredNorm(), 1e-300));
    if (val < -1e-12 * scale) throw Error(Errc::NotPSD, "negative quadratic form detected");
    return std::sqrt(std::max(0.0, val));
  }
  double quad_norm(const BlockVector& x, Form which) const { return quad_norm(x.data(), which); }

  Vec apply_dhat(const Vec& x) const {
    const auto& p = partition();
    Vec y(x.size());
    for (Index i = 0; i < p.blocks(); ++i)
      y.segment(p.offset(i), p.dim(i)) = dhat_apply(i, x.segment(p.offset(i), p.dim(i)));
    return y;
  }
  Vec solve_dhat(const Vec& x) const {
    const auto& p = partition();
    Vec y(x.size());
    for (Index i = 0; i < p.blocks(); ++i)
      y.segment(p.offset(i), p.dim(i)) = dhat_solve(i, x.segment(p.offset(i), p.dim(i)));
    return y;
  }

  // ---- test hooks -------------------------------------------------------

  /// Densifies an implicit form by applying it to the identity columns.
  Mat densify(Form which) const {
    const Index n = q_.size();
    Mat m(n, n);
    for (Index c = 0; c < n; ++c) {
      Vec e = Vec::Unit(n, c);
      switch (which) {
        case Form::Q: m.col(c) = q_.apply(e); break;
        case Form::T: m.col(c) = apply_T(e); break;
        case Form::Qhat: m.col(c) = apply_Qhat(e); break;
        case Form::QhatInv: m.col(c) = solve_Qhat(e); break;
      }
    }
    return m;
  }

  Mat dense_dhat() const {
    const auto& p = partition();
    Mat d = Mat::Zero(q_.size(), q_.size());
    for (Index i = 0; i < p.blocks(); ++i) d.block(p.offset(i), p.offset(i), p.dim(i), p.dim(i)) = dhat(i);
    return d;
  }

  /// (tau Dh + U)(rho Dh)^{-1}(tau Dh + U*) from explicit dense matrices.
  Mat dense_factored_Qhat() const {
    Mat dh = dense_dhat();
    Mat u = q_.dense_upper();
    Mat left = tau_ * dh + u;
    return left * (rho_ * dh).inverse() * left.transpose();
  }

 private:
  void check(const Vec& x) const {
    if (x.size() != q_.size()) throw Error(Errc::DimensionMismatch, "operand length does not match majorizer");
  }

  BlockSymOperator q_;
  MajorizerKind kind_ = MajorizerKind::Sgs;
  double omega_ = 1.0, tau_ = 1.0, rho_ = 1.0;
  std::shared_ptr<const std::vector<Mat>> shifts_;
  std::shared_ptr<const std::vector<Eigen::LLT<Mat>>> shifted_factors_;
};

/// T_Q = U D^{-1} U*, Qhat = (D + U) D^{-1} (D + U*).
inline Majorizer sgs_operator(const BlockSymOperator& q) { return Majorizer(q, 1.0); }

inline Majorizer ssor_operator(const BlockSymOperator& q, double omega) { return Majorizer(q, omega); }

inline Majorizer shifted_sgs_operator(const BlockSymOperator& q, std::vector<Mat> shifts) {
  return Majorizer(q, 1.0, std::move(shifts));
}

/// J_i = ||Q_ii||_2 I - Q_ii, so that Q_ii + J_i is a multiple of the identity.
inline Mat conservative_shift(const Mat& qii) {
  Eigen::SelfAdjointEigenSolver<Mat> es(qii, Eigen::EigenvaluesOnly);
  const double mu = es.eigenvalues().maxCoeff();
  Mat j = mu * Mat::Identity(qii.rows(), qii.cols()) - qii;
  return j;
}

/// Conservative shifts on the selected blocks, zero elsewhere.
inline std::vector<Mat> conservative_shifts(const BlockSymOperator& q, const std::vector<Index>& which) {
  std::vector<Mat> js;
  for (Index i = 0; i < q.blocks(); ++i) js.push_back(Mat::Zero(q.partition().dim(i), q.partition().dim(i)));
  for (Index i : which) js[static_cast<std::size_t>(i)] = conservative_shift(q.diag(i));
  return js;
}

}  // namespace sgsqp
