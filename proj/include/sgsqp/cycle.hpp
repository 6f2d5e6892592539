#pragma once

#include <Eigen/IterativeLinearSolvers>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "sgsqp/problem.hpp"

namespace sgsqp {

/// How each block linear system of a cycle is solved.
struct InnerSolve {
  enum class Kind { Direct, Iterative, Noisy };

  Kind kind = Kind::Direct;
  double rel_tol = 1e-8;  // Iterative: ||residual|| <= rel_tol * ||rhs||
  int max_inner = 1000;
  double noise = 0.0;  // Noisy: exact solve plus noise * (1 + ||y||) / sqrt(n) * N(0, 1) per entry
  std::uint64_t seed = 0;

  static InnerSolve exact() { return {}; }
  static InnerSolve iterative(double rel_tol, int max_inner = 1000) {
    InnerSolve s;
    s.kind = Kind::Iterative;
    s.rel_tol = rel_tol;
    s.max_inner = max_inner;
    return s;
  }
  static InnerSolve noisy(double scale, std::uint64_t seed) {
    InnerSolve s;
    s.kind = Kind::Noisy;
    s.noise = scale;
    s.seed = seed;
    return s;
  }
};

struct CycleOptions {
  InnerSolve inner;
  /// Forward-sweep reuse of backward iterates with constant c (sGS only).
  std::optional<double> reuse_c;
};

struct BlockSolveStats {
  int iterations = 0;
  double residual = 0.0;
  bool converged = true;
  bool reused = false;
};

struct CycleResult {
  BlockVector x_plus;
  BlockVector x_prime;      // backward-sweep iterates
  BlockVector delta_prime;  // realized backward errors
  BlockVector delta;        // realized forward errors; delta_prime_1 == delta_1
  BlockVector Delta;        // perturbation of the proximal subproblem
  Vec gamma1;               // certifying subgradient on block 1
  double xi = 0.0;          // ||Qhat^{-1/2} Delta||
  double xi_bound = 0.0;    // ||(rho Dh)^{-1/2}(delta - delta')|| + ||Qhat^{-1/2} delta'||
  std::vector<BlockSolveStats> backward, forward;
  bool stalled = false;  // some inner solve hit max_inner without meeting rel_tol
};

namespace detail {

class BlockSolver {
 public:
  explicit BlockSolver(const InnerSolve& opt) : opt_(opt), rng_(opt.seed) {}

  /// Approximately solves Dh_i y = rhs; returns y, stores the residual
  /// Dh_i y - rhs. `abs_target` tightens the stopping rule.
  Vec solve(const Majorizer& maj, Index i, const Vec& rhs, Vec& residual, BlockSolveStats& st,
            std::optional<double> abs_target = std::nullopt) {
    Vec y;
    st = {};
    switch (opt_.kind) {
      case InnerSolve::Kind::Direct: y = maj.dhat_solve(i, rhs); break;
      case InnerSolve::Kind::Noisy: {
        y = maj.dhat_solve(i, rhs);
        std::normal_distribution<double> nd(0.0, 1.0);
        const double amp = opt_.noise * (1.0 + y.norm()) / std::sqrt(static_cast<double>(y.size()));
        for (Index k = 0; k < y.size(); ++k) y(k) += amp * nd(rng_);
        break;
      }
      case InnerSolve::Kind::Iterative: {
        const double rn = rhs.norm();
        if (rn == 0.0) {
          y = Vec::Zero(rhs.size());
          break;
        }
        double tol = opt_.rel_tol;
        if (abs_target) tol = std::min(tol, *abs_target / rn);
        Mat a = maj.dhat(i);
        Eigen::ConjugateGradient<Mat, Eigen::Lower | Eigen::Upper, Eigen::IdentityPreconditioner> cg;
        cg.setMaxIterations(opt_.max_inner);
        cg.setTolerance(tol);
        cg.compute(a);
        y = cg.solve(rhs);
        st.iterations = static_cast<int>(cg.iterations());
        residual = a * y - rhs;
        st.residual = residual.norm();
        st.converged = st.residual <= tol * rn || cg.info() == Eigen::Success;
        return y;
      }
    }
    residual = maj.dhat_apply(i, y) - rhs;
    st.residual = residual.norm();
    return y;
  }

  Vec direct(const Majorizer& maj, Index i, const Vec& rhs, Vec& residual, BlockSolveStats& st) {
    Vec y = maj.dhat_solve(i, rhs);
    residual = maj.dhat_apply(i, y) - rhs;
    st = {};
    st.residual = residual.norm();
    return y;
  }

 private:
  InnerSolve opt_;
  std::mt19937_64 rng_;
};

}  // namespace detail

/// Delta = delta' + (tau Dh + U)(rho Dh)^{-1}(delta - delta'); for sGS this is
/// delta + U D^{-1}(delta - delta').
inline BlockVector perturbation(const Majorizer& maj, const BlockVector& delta_prime, const BlockVector& delta) {
  require_same_partition(maj.partition(), delta_prime.partition(), "delta' does not match the majorizer");
  require_same_partition(maj.partition(), delta.partition(), "delta does not match the majorizer");
  if (delta_prime.block(0) != delta.block(0))
    throw Error(Errc::FirstBlockMismatch, "delta'_1 must equal delta_1", 1);
  Vec diff = delta.data() - delta_prime.data();
  Vec w = maj.solve_dhat(diff) / maj.rho();
  Vec out = delta_prime.data() + maj.tau() * maj.apply_dhat(w) + maj.base().apply_upper(w);
  return BlockVector(maj.partition(), std::move(out));
}

struct ErrorBound {
  double bound = 0.0;  // ||(rho Dh)^{-1/2}(delta - delta')|| + ||Qhat^{-1/2} delta'||
  double xi = 0.0;     // ||Qhat^{-1/2} Delta(delta', delta)||
};

inline ErrorBound error_bound(const Majorizer& maj, const BlockVector& delta_prime, const BlockVector& delta) {
  BlockVector d = perturbation(maj, delta_prime, delta);
  ErrorBound eb;
  eb.xi = maj.qhat_inv_half_norm(d.data());
  eb.bound = maj.dinv_half_norm(delta.data() - delta_prime.data()) + maj.qhat_inv_half_norm(delta_prime.data());
  return eb;
}

/// Accept x'_i as x^{k+1}_i when ||sum_{j<i} Q_ji^*(x^{k+1}_j - xt_j)|| <= (c / sqrt(s)) ||delta_tilde||.
inline bool forward_reuse_check(const BlockSymOperator& q, const Vec& x_tilde, const Vec& x_next_partial,
                                const Vec& /*x_prime*/, const Vec& delta_tilde, double c, Index i) {
  const double rho = c / std::sqrt(static_cast<double>(q.blocks())) * delta_tilde.norm();
  const double lhs = q.row_lower(i, x_next_partial - x_tilde).norm();
  return lhs <= rho;
}

/// One backward/forward sweep cycle for `maj` (sGS, sSOR or shifted).
///
/// x_plus exactly minimizes
///   p(x_1) + q(x) + 1/2 ||x - xbar||_T^2 - <x, Delta(delta', delta)>
/// for the realized error vectors, which are zero in Direct mode.
inline CycleResult cycle(const CompositeQP& prob, const Majorizer& maj, const BlockVector& xbar,
                         const CycleOptions& opts = {}) {
  require_same_partition(prob.partition(), xbar.partition(), "xbar does not match the problem");
  const auto& part = prob.partition();
  const auto& q = prob.Q();
  const Index s = part.blocks();
  const double tau = maj.tau(), rho = maj.rho(), a = 1.0 - tau;
  if (opts.reuse_c && maj.omega() != 1.0)
    throw Error(Errc::InvalidParams, "forward-sweep reuse is only defined for the sGS cycle");

  const Vec& xb = xbar.data();
  const Vec& b = prob.b().data();
  CycleResult r;
  r.x_plus = BlockVector(part);
  r.x_prime = BlockVector(part);
  r.delta_prime = BlockVector(part);
  r.delta = BlockVector(part);
  r.backward.resize(static_cast<std::size_t>(s));
  r.forward.resize(static_cast<std::size_t>(s));
  Vec& xp = r.x_prime.data();
  Vec& xn = r.x_plus.data();
  detail::BlockSolver solver(opts.inner);

  auto seg = [&](Index i) { return std::pair{part.offset(i), part.dim(i)}; };

  // backward sweep i = s..2
  for (Index i = s - 1; i >= 1; --i) {
    auto [o, n] = seg(i);
    Vec xbi = xb.segment(o, n);
    Vec rhs = b.segment(o, n) + maj.shift_apply(i, xbi) - q.row_lower(i, xb) - q.row_upper(i, xp);
    if (a != 0.0) rhs -= a * maj.dhat_apply(i, xbi);
    Vec res;
    Vec y = solver.solve(maj, i, rhs, res, r.backward[static_cast<std::size_t>(i)]);
    xp.segment(o, n) = y / tau;
    r.delta_prime.block(i) = res;
    r.stalled |= !r.backward[static_cast<std::size_t>(i)].converged;
  }

  // block 1: p(x) + (tau^2 / 2 rho) <x, Dh_11 x> - <c1 + ((1 - tau)^2 / rho) Dh_11 xbar_1, x>
  {
    auto [o, n] = seg(0);
    Vec xb1 = xb.segment(o, n);
    Vec c1 = b.segment(o, n) + maj.shift_apply(0, xb1) - q.row_upper(0, xp);
    if (a != 0.0) c1 += (a * a / rho) * maj.dhat_apply(0, xb1);
    const double scale = tau * tau / rho;
    Vec x1;
    Vec d1 = Vec::Zero(n);
    if (prob.p().is_zero()) {
      Vec res;
      Vec y = solver.solve(maj, 0, c1 / scale, res, r.backward[0]);
      x1 = y;
      d1 = scale * res;
      r.stalled |= !r.backward[0].converged;
    } else {
      Block1Solution sol = solve_block1(prob.p(), scale * maj.dhat(0), c1);
      x1 = sol.x;
    }
    r.gamma1 = c1 + d1 - scale * maj.dhat_apply(0, x1);
    if (prob.p().is_zero()) r.gamma1.setZero();
    xn.segment(o, n) = x1;
    xp.segment(o, n) = (tau * x1 - a * xb1) / rho;
    r.delta.block(0) = d1;
    r.delta_prime.block(0) = d1;
    r.forward[0] = r.backward[0];
  }

  const double reuse_rho =
      opts.reuse_c ? *opts.reuse_c / std::sqrt(static_cast<double>(s)) * r.delta_prime.norm() : 0.0;

  // forward sweep i = 2..s
  for (Index i = 1; i < s; ++i) {
    auto [o, n] = seg(i);
    auto& st = r.forward[static_cast<std::size_t>(i)];
    if (opts.reuse_c) {
      Vec corr = q.row_lower(i, xn - xb);
      if (corr.norm() <= reuse_rho) {
        xn.segment(o, n) = xp.segment(o, n);
        r.delta.block(i) = r.delta_prime.block(i) + corr;
        st = {};
        st.reused = true;
        st.residual = r.delta.block(i).norm();
        continue;
      }
    }
    Vec xbi = xb.segment(o, n);
    Vec rhs = b.segment(o, n) + maj.shift_apply(i, xbi) - q.row_lower(i, xn) - q.row_upper(i, xp);
    if (a != 0.0) rhs -= a * maj.dhat_apply(i, Vec(xp.segment(o, n)));
    Vec res;
    Vec y;
    if (opts.reuse_c) {
      const double target = M_SQRT2 * reuse_rho;
      if (target == 0.0) {
        y = solver.direct(maj, i, rhs, res, st);
      } else {
        y = solver.solve(maj, i, rhs, res, st, target);
        if (res.norm() > target) y = solver.direct(maj, i, rhs, res, st);
      }
    } else {
      y = solver.solve(maj, i, rhs, res, st);
      r.stalled |= !st.converged;
    }
    xn.segment(o, n) = y / tau;
    r.delta.block(i) = res;
  }

  r.Delta = perturbation(maj, r.delta_prime, r.delta);
  r.xi = maj.qhat_inv_half_norm(r.Delta.data());
  r.xi_bound = maj.dinv_half_norm(r.delta.data() - r.delta_prime.data()) + maj.qhat_inv_half_norm(r.delta_prime.data());
  return r;
}

/// One block sGS cycle (Direct, Iterative or Noisy inner solves).
inline CycleResult sgs_cycle(const CompositeQP& prob, const BlockVector& xbar, const CycleOptions& opts = {}) {
  return cycle(prob, prob.majorizer(), xbar, opts);
}

/// One block sSOR cycle with relaxation omega in [1, 2).
inline CycleResult ssor_cycle(const CompositeQP& prob, const BlockVector& xbar, double omega,
                              const CycleOptions& opts = {}) {
  return cycle(prob, prob.ssor_majorizer(omega), xbar, opts);
}

/// x^{k+1} = x^k + Qhat^{-1}(b - Q x^k) via two triangular block sweeps.
inline BlockVector classical_step(const Majorizer& maj, const BlockVector& b, const BlockVector& xk) {
  require_same_partition(maj.partition(), xk.partition(), "iterate does not match the operator");
  Vec r = b.data() - maj.base().apply(xk.data());
  return BlockVector(xk.partition(), xk.data() + maj.solve_Qhat(r));
}

inline BlockVector classical_sgs_step(const BlockSymOperator& q, const BlockVector& b, const BlockVector& xk) {
  return classical_step(sgs_operator(q), b, xk);
}

/// Residual of the optimality condition gamma + Qhat x+ = b + T xbar + Delta,
/// with gamma = (gamma_1; 0; ...; 0) taken as block 1 of the right side.
struct SubproblemResidual {
  double subgrad = 0.0;  // dist(gamma_1, dp(x+_1))
  double linear = 0.0;   // || blocks 2..s of the residual ||
};

inline SubproblemResidual subproblem_residual(const CompositeQP& prob, const Majorizer& maj, const BlockVector& xbar,
                                              const BlockVector& x_plus, const BlockVector& Delta) {
  const auto& part = prob.partition();
  Vec rhs = prob.b().data() + maj.apply_T(xbar.data()) + Delta.data() - maj.apply_Qhat(x_plus.data());
  SubproblemResidual out;
  out.subgrad = subgrad_residual(prob.p(), x_plus.block(0), rhs.segment(0, part.dim(0)));
  out.linear = rhs.tail(part.total() - part.dim(0)).norm();
  return out;
}

}  // namespace sgsqp
