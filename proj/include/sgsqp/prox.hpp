#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "sgsqp/partition.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace sgsqp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- symmetric matrix vectorization ---------------------------------------

inline Index svec_size(Index m) { return m * (m + 1) / 2; }

/// Side m with m(m+1)/2 == n, or -1.
inline Index svec_side(Index n) {
  const auto m = static_cast<Index>(std::llround((std::sqrt(8.0 * static_cast<double>(n) + 1.0) - 1.0) / 2.0));
  return svec_size(m) == n ? m : -1;
}

/// Norm-preserving vectorization of the lower triangle (column-major),
/// off-diagonal entries scaled by sqrt(2).
inline Vec svec(const Mat& x) {
  const Index m = x.rows();
  Vec v(svec_size(m));
  Index k = 0;
  for (Index j = 0; j < m; ++j)
    for (Index i = j; i < m; ++i) v(k++) = (i == j) ? x(i, j) : M_SQRT2 * 0.5 * (x(i, j) + x(j, i));
  return v;
}

inline Mat smat(const Eigen::Ref<const Vec>& v, Index m) {
  if (v.size() != svec_size(m)) throw Error(Errc::ShapeMismatch, "svec length does not match matrix side");
  Mat x(m, m);
  Index k = 0;
  for (Index j = 0; j < m; ++j)
    for (Index i = j; i < m; ++i) {
      const double val = (i == j) ? v(k) : v(k) / M_SQRT2;
      x(i, j) = val;
      x(j, i) = val;
      ++k;
    }
  return x;
}

inline Mat project_psd(const Mat& x) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (x + x.transpose()));
  Vec lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

// ---- nonsmooth term on block 1 --------------------------------------------

struct ProxSpec {
  enum class Kind { Zero, L1, NonnegOrthant, Box, PsdCone };

  Kind kind = Kind::Zero;
  double weight = 0.0;        // L1
  Vec lo, hi;                 // Box; +-inf entries allowed
  Index side = 0;             // PsdCone matrix side m
  bool symmetric_vec = true;  // PsdCone: svec (m(m+1)/2) or full column-major (m^2)

  static ProxSpec zero() { return {}; }
  static ProxSpec l1(double lambda) {
    if (!(lambda >= 0.0)) throw Error(Errc::InvalidParams, "L1 weight must be nonnegative");
    ProxSpec s;
    s.kind = Kind::L1;
    s.weight = lambda;
    return s;
  }
  static ProxSpec nonneg() {
    ProxSpec s;
    s.kind = Kind::NonnegOrthant;
    return s;
  }
  static ProxSpec box(Vec lo, Vec hi) {
    if (lo.size() != hi.size()) throw Error(Errc::ShapeMismatch, "box bounds differ in length");
    if ((lo.array() > hi.array()).any()) throw Error(Errc::InvalidParams, "box requires lo <= hi");
    ProxSpec s;
    s.kind = Kind::Box;
    s.lo = std::move(lo);
    s.hi = std::move(hi);
    return s;
  }
  static ProxSpec psd_cone(Index m, bool symmetric_vec = true) {
    ProxSpec s;
    s.kind = Kind::PsdCone;
    s.side = m;
    s.symmetric_vec = symmetric_vec;
    return s;
  }

  bool is_zero() const { return kind == Kind::Zero; }
  bool is_indicator() const { return kind == Kind::NonnegOrthant || kind == Kind::Box || kind == Kind::PsdCone; }

  /// Throws ShapeMismatch when the spec cannot act on an n-dimensional block.
  void validate(Index n) const {
    if (kind == Kind::Box && lo.size() != n) throw Error(Errc::ShapeMismatch, "box bounds do not match block 1");
    if (kind == Kind::PsdCone) {
      const Index expect = symmetric_vec ? svec_size(side) : side * side;
      if (side < 1 || expect != n) throw Error(Errc::ShapeMismatch, "PSD cone side does not match block 1");
    }
  }

  Mat to_matrix(const Eigen::Ref<const Vec>& v) const {
    if (symmetric_vec) return smat(v, side);
    return Eigen::Map<const Mat>(v.data(), side, side);
  }
  Vec from_matrix(const Mat& x) const {
    if (symmetric_vec) return svec(x);
    return Eigen::Map<const Vec>(x.data(), x.size());
  }

  /// p(x); +inf outside the domain of an indicator.
  double value(const Eigen::Ref<const Vec>& x) const {
    switch (kind) {
      case Kind::Zero: return 0.0;
      case Kind::L1: return weight * x.lpNorm<1>();
      case Kind::NonnegOrthant: return (x.array() < 0.0).any() ? kInf : 0.0;
      case Kind::Box: return ((x.array() < lo.array()) || (x.array() > hi.array())).any() ? kInf : 0.0;
      case Kind::PsdCone: {
        validate(x.size());
        Mat m = to_matrix(x);
        if (!symmetric_vec && !m.isApprox(m.transpose(), 1e-12)) return kInf;
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
        const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
        return es.eigenvalues().minCoeff() < -1e-10 * scale ? kInf : 0.0;
      }
    }
    return 0.0;
  }
};

/// argmin_x p(x) + (mu/2) ||x - v||^2
inline Vec prox(const ProxSpec& spec, double mu, const Eigen::Ref<const Vec>& v) {
  if (!(mu > 0.0)) throw Error(Errc::InvalidParams, "prox parameter must be positive");
  switch (spec.kind) {
    case ProxSpec::Kind::Zero: return v;
    case ProxSpec::Kind::L1: {
      const double t = spec.weight / mu;
      return v.array().sign() * (v.array().abs() - t).max(0.0);
    }
    case ProxSpec::Kind::NonnegOrthant: return v.cwiseMax(0.0);
    case ProxSpec::Kind::Box:
      if (spec.lo.size() != v.size()) throw Error(Errc::ShapeMismatch, "box bounds do not match vector");
      return v.cwiseMax(spec.lo).cwiseMin(spec.hi);
    case ProxSpec::Kind::PsdCone:
      spec.validate(v.size());
      return spec.from_matrix(project_psd(spec.to_matrix(v)));
  }
  return v;
}

namespace detail {

// dist(G, N_{S+}(X)) for X PSD: with X's range R and kernel K,
// N(X) = { -P_K M P_K : M PSD }, so the distance splits into the RR and RK
// parts of G plus the positive part of G_KK.
inline double psd_normal_cone_distance(const Mat& x, const Mat& g) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (x + x.transpose()));
  const Vec& lam = es.eigenvalues();
  const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
  const double tol = 1e-10 * scale;
  if (lam.minCoeff() < -tol) return kInf;
  const Mat gs = 0.5 * (g + g.transpose());
  const double skew2 = (g - gs).squaredNorm();
  Mat gt = es.eigenvectors().transpose() * gs * es.eigenvectors();
  const Index m = x.rows();
  Index k = 0;  // eigenvalues sorted ascending; the first k span the kernel
  while (k < m && lam(k) <= tol) ++k;
  double d2 = skew2;
  // range-range and range-kernel parts must vanish
  d2 += gt.bottomRightCorner(m - k, m - k).squaredNorm();
  d2 += 2.0 * gt.topRightCorner(k, m - k).squaredNorm();
  if (k > 0) {
    Eigen::SelfAdjointEigenSolver<Mat> ek(gt.topLeftCorner(k, k), Eigen::EigenvaluesOnly);
    d2 += ek.eigenvalues().cwiseMax(0.0).squaredNorm();
  }
  return std::sqrt(d2);
}

}  // namespace detail

/// dist(g, subdifferential of p at x); +inf when x is outside dom(p).
inline double subgrad_residual(const ProxSpec& spec, const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& g) {
  if (x.size() != g.size()) throw Error(Errc::ShapeMismatch, "point and subgradient differ in length");
  double d2 = 0.0;
  switch (spec.kind) {
    case ProxSpec::Kind::Zero: return g.norm();
    case ProxSpec::Kind::L1:
      for (Index i = 0; i < x.size(); ++i) {
        double r;
        if (x(i) > 0.0) r = g(i) - spec.weight;
        else if (x(i) < 0.0) r = g(i) + spec.weight;
        else r = std::max(0.0, std::abs(g(i)) - spec.weight);
        d2 += r * r;
      }
      return std::sqrt(d2);
    case ProxSpec::Kind::NonnegOrthant:
      for (Index i = 0; i < x.size(); ++i) {
        if (x(i) < 0.0) return kInf;
        const double r = x(i) > 0.0 ? g(i) : std::max(0.0, g(i));
        d2 += r * r;
      }
      return std::sqrt(d2);
    case ProxSpec::Kind::Box:
      for (Index i = 0; i < x.size(); ++i) {
        const double lo = spec.lo(i), hi = spec.hi(i);
        if (x(i) < lo || x(i) > hi) return kInf;
        double r;
        if (lo == hi) r = 0.0;
        else if (x(i) == lo) r = std::max(0.0, g(i));
        else if (x(i) == hi) r = std::max(0.0, -g(i));
        else r = g(i);
        d2 += r * r;
      }
      return std::sqrt(d2);
    case ProxSpec::Kind::PsdCone:
      spec.validate(x.size());
      return detail::psd_normal_cone_distance(spec.to_matrix(x), spec.to_matrix(g));
  }
  return kInf;
}

struct Block1Solution {
  Vec x;
  Vec gamma;  // certifying subgradient, gamma in dp(x)
};

/// mu with Q11 == mu I (to 1e-12 relative), if any.
inline std::optional<double> identity_multiple(const Mat& m) {
  const double mu = m.trace() / static_cast<double>(m.rows());
  if (!(mu > 0.0)) return std::nullopt;
  if ((m - mu * Mat::Identity(m.rows(), m.cols())).norm() > 1e-12 * m.norm()) return std::nullopt;
  return mu;
}

/// argmin p(x1) + 1/2 <x1, Q11 x1> - <c1, x1> (+ 1/2 ||x1 - xbar1||^2_{J1}).
///
/// Nonsmooth p is handled in closed form only when Q11 + J1 = mu I; the
/// conservative J1 = ||Q11||_2 I - Q11 always achieves this.
inline Block1Solution solve_block1(const ProxSpec& spec, const Mat& q11, const Vec& c1,
                                   const Mat* j1 = nullptr, const Vec* xbar1 = nullptr) {
  const Index n = q11.rows();
  if (q11.cols() != n || c1.size() != n) throw Error(Errc::ShapeMismatch, "block-1 data has inconsistent shapes");
  if (j1 && (j1->rows() != n || j1->cols() != n || !xbar1 || xbar1->size() != n))
    throw Error(Errc::ShapeMismatch, "block-1 shift requires a matching J1 and xbar1");
  spec.validate(n);
  Mat h = j1 ? Mat(q11 + *j1) : q11;
  Vec c = j1 ? Vec(c1 + *j1 * *xbar1) : c1;
  Block1Solution out;
  if (spec.is_zero()) {
    Eigen::LLT<Mat> llt(h);
    if (llt.info() != Eigen::Success) throw Error(Errc::DiagonalNotPD, "block-1 system is not positive definite", 1);
    out.x = llt.solve(c);
  } else {
    auto mu = identity_multiple(h);
    if (!mu) throw Error(Errc::NeedsShift, "nonsmooth block-1 problem needs Q11 + J1 = mu I", 1);
    out.x = prox(spec, *mu, c / *mu);
  }
  out.gamma = c - h * out.x;
  return out;
}

}  // namespace sgsqp
