#pragma once

// Brute-force dense references. Independent of the sweep machinery: every
// routine here works on explicitly assembled matrices.

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <vector>

#include "sgsqp/problem.hpp"

namespace sgsqp::oracle {

struct EigenData {
  Vec values;   // ascending
  Mat vectors;  // orthonormal columns
};

inline EigenData eig(const Mat& m) {
  if (m.rows() != m.cols()) throw Error(Errc::NotSymmetric, "matrix is not square");
  if ((m - m.transpose()).norm() > 1e-10 * std::max(1.0, m.norm()))
    throw Error(Errc::NotSymmetric, "matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()));
  return {es.eigenvalues(), es.eigenvectors()};
}

/// Eigenvalues of A v = lambda B v with B positive definite (ascending).
inline Vec generalized_eigenvalues(const Mat& a, const Mat& b) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(0.5 * (a + a.transpose()), 0.5 * (b + b.transpose()),
                                                   Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) throw Error(Errc::NotPD, "generalized eigenproblem failed");
  return es.eigenvalues();
}

inline double spectral_norm(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

/// Symmetric M^{p} for PSD M (eigenvalues clamped at 0; p < 0 needs M > 0).
inline Mat sym_power(const Mat& m, double p) {
  EigenData e = eig(m);
  Vec lam = e.values.unaryExpr([p](double v) { return std::pow(std::max(v, 0.0), p); });
  return e.vectors * lam.asDiagonal() * e.vectors.transpose();
}

namespace detail {

inline double composite_kkt(const ProxSpec& p, Index n1, const Mat& h, const Vec& c, const Vec& x) {
  Vec g = c - h * x;
  const double r1 = subgrad_residual(p, x.head(n1), g.head(n1));
  if (!std::isfinite(r1)) return r1;
  return std::sqrt(r1 * r1 + g.tail(x.size() - n1).squaredNorm());
}

// Exact solve on a guessed active set; returns false if the guess is invalid.
inline bool polish(const ProxSpec& p, Index n1, const Mat& h, const Vec& c, Vec& x) {
  using K = ProxSpec::Kind;
  const Index n = x.size();
  std::vector<Index> free_idx;
  Vec fixed = Vec::Zero(n);
  Vec shift = Vec::Zero(n);
  std::vector<bool> is_free(static_cast<std::size_t>(n), true);
  for (Index i = 0; i < n1; ++i) {
    const double v = x(i);
    switch (p.kind) {
      case K::L1:
        if (v == 0.0) is_free[static_cast<std::size_t>(i)] = false;
        else shift(i) = v > 0 ? p.weight : -p.weight;
        break;
      case K::NonnegOrthant:
        if (v <= 0.0) is_free[static_cast<std::size_t>(i)] = false;
        break;
      case K::Box:
        if (v <= p.lo(i)) {
          is_free[static_cast<std::size_t>(i)] = false;
          fixed(i) = p.lo(i);
        } else if (v >= p.hi(i)) {
          is_free[static_cast<std::size_t>(i)] = false;
          fixed(i) = p.hi(i);
        }
        break;
      default: return false;
    }
  }
  for (Index i = 0; i < n; ++i)
    if (is_free[static_cast<std::size_t>(i)]) free_idx.push_back(i);
  const Index m = static_cast<Index>(free_idx.size());
  Mat hr(m, m);
  Vec cr(m);
  Vec rhs_full = c - shift - h * fixed;
  for (Index a = 0; a < m; ++a) {
    cr(a) = rhs_full(free_idx[static_cast<std::size_t>(a)]);
    for (Index b = 0; b < m; ++b) hr(a, b) = h(free_idx[static_cast<std::size_t>(a)], free_idx[static_cast<std::size_t>(b)]);
  }
  Eigen::LDLT<Mat> ldlt(hr);
  if (ldlt.info() != Eigen::Success) return false;
  Vec xr = ldlt.solve(cr);
  Vec cand = fixed;
  for (Index a = 0; a < m; ++a) cand(free_idx[static_cast<std::size_t>(a)]) = xr(a);
  // sign / feasibility consistency of the guess
  for (Index i = 0; i < n1; ++i) {
    if (!is_free[static_cast<std::size_t>(i)]) continue;
    if (p.kind == K::L1 && cand(i) * shift(i) <= 0.0) return false;
    if (p.kind == K::NonnegOrthant && cand(i) <= 0.0) return false;
    if (p.kind == K::Box && (cand(i) <= p.lo(i) || cand(i) >= p.hi(i))) return false;
  }
  x = cand;
  return true;
}

}  // namespace detail

/// argmin p(x_{1:n1}) + 1/2 <x, H x> - <c, x> for symmetric PSD H.
///
/// Smooth p: one dense (pseudo-inverse) solve. Otherwise restarted FISTA with
/// step 1/lambda_max(H), followed by an exact active-set polish.
inline Vec composite_minimize(const ProxSpec& p, Index n1, const Mat& h, const Vec& c, double tol = 1e-12,
                              int max_iter = 2000000) {
  const Index n = h.rows();
  const double scale = 1.0 + c.norm();
  if (p.is_zero()) {
    EigenData e = eig(h);
    const double cut = 1e-12 * std::max(1.0, e.values.cwiseAbs().maxCoeff());
    Vec coef = e.vectors.transpose() * c;
    for (Index i = 0; i < n; ++i) coef(i) = e.values(i) > cut ? coef(i) / e.values(i) : 0.0;
    Vec x = e.vectors * coef;
    // one refinement step on the range
    Vec r = c - h * x;
    Vec dc = e.vectors.transpose() * r;
    for (Index i = 0; i < n; ++i) dc(i) = e.values(i) > cut ? dc(i) / e.values(i) : 0.0;
    x += e.vectors * dc;
    if ((c - h * x).norm() > 1e-8 * scale) throw Error(Errc::Unbounded, "linear term is not in the range of H");
    return x;
  }
  const double lip = eig(h).values.maxCoeff();
  if (!(lip > 0.0)) throw Error(Errc::InvalidParams, "zero quadratic with nonsmooth term");
  auto step = [&](const Vec& y) {
    Vec z = y - (h * y - c) / lip;
    z.head(n1) = prox(p, lip, z.head(n1));
    return z;
  };
  Vec x = step(Vec::Zero(n));
  Vec x_old = x, y = x;
  double t = 1.0;
  double best = kInf;
  Vec best_x = x;
  for (int it = 0; it < max_iter; ++it) {
    Vec xn = step(y);
    if ((xn - x).dot(x - x_old) < 0.0 && it > 0) {  // gradient-style restart
      t = 1.0;
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = xn + ((t - 1.0) / tn) * (xn - x);
    t = tn;
    x_old = x;
    x = xn;
    if (it % 50 == 0 || it + 1 == max_iter) {
      double k = detail::composite_kkt(p, n1, h, c, x);
      if (k < best) {
        best = k;
        best_x = x;
      }
      Vec pol = x;
      if (detail::polish(p, n1, h, c, pol)) {
        const double kp = detail::composite_kkt(p, n1, h, c, pol);
        if (kp < best) {
          best = kp;
          best_x = pol;
        }
      }
      if (best <= tol * scale) return best_x;
      if (!std::isfinite(x.norm()) || x.norm() > 1e12 * scale) throw Error(Errc::Unbounded, "iterates diverge");
    }
  }
  if (best <= 1e3 * tol * scale) return best_x;
  throw Error(Errc::NotConverged, "dense composite minimization did not reach tolerance");
}

/// min p(x_1) + q(x) + 1/2 ||x - xbar||_T^2 - <x, Delta> with T, Qhat from `maj`.
inline BlockVector dense_subproblem_solve(const CompositeQP& prob, const Majorizer& maj, const BlockVector& xbar,
                                          const BlockVector& Delta) {
  Mat qhat = maj.dense_factored_Qhat();
  Mat t = qhat - prob.Q().densify();
  Vec c = prob.b().data() + t * xbar.data() + Delta.data();
  return BlockVector(prob.partition(), composite_minimize(prob.p(), prob.partition().dim(0), qhat, c));
}

inline BlockVector dense_subproblem_solve(const CompositeQP& prob, const BlockVector& xbar, const BlockVector& Delta) {
  return dense_subproblem_solve(prob, prob.majorizer(), xbar, Delta);
}

struct Optimum {
  BlockVector x;
  double F = 0.0;
};

/// Ground-truth minimizer of F; the minimum-norm solution for p = 0 and
/// singular Q.
inline Optimum dense_optimum(const CompositeQP& prob, double tol = 1e-12) {
  Vec x = composite_minimize(prob.p(), prob.partition().dim(0), prob.Q().densify(), prob.b().data(), tol);
  Optimum o{BlockVector(prob.partition(), x), objective(prob, x)};
  if (!std::isfinite(o.F)) throw Error(Errc::Infeasible, "oracle optimum is outside dom(p)");
  return o;
}

}  // namespace sgsqp::oracle
