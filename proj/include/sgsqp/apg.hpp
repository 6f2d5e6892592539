#pragma once

// Inexact (accelerated) proximal gradient method built on sGS / sSOR cycles.

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sgsqp/cycle.hpp"
#include "sgsqp/oracle.hpp"

namespace sgsqp {

struct StepSchedule {
  enum class Kind { Constant, Nesterov, NesterovRestart };

  Kind kind = Kind::Constant;
  int period = 0;  // NesterovRestart

  static StepSchedule constant() { return {}; }
  static StepSchedule nesterov() { return {Kind::Nesterov, 0}; }
  static StepSchedule restart(int period) {
    if (period < 1) throw Error(Errc::InvalidParams, "restart period must be at least 1");
    return {Kind::NesterovRestart, period};
  }

  /// t_{k+1} given t_k after iteration k.
  double next(double tk, int k) const {
    if (kind == Kind::Constant) return 1.0;
    if (kind == Kind::NesterovRestart && k % period == 0) return 1.0;
    return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
  }
  bool restarts_at(int k) const { return kind == Kind::NesterovRestart && k % period == 0; }

  std::string name() const {
    switch (kind) {
      case Kind::Constant: return "constant";
      case Kind::Nesterov: return "nesterov";
      case Kind::NesterovRestart: return "restart:" + std::to_string(period);
    }
    return "?";
  }
};

struct ToleranceSchedule {
  enum class Kind { Exact, Geometric, Power };

  Kind kind = Kind::Exact;
  double eps0 = 0.0;
  double rate = 0.0;  // Geometric ratio r in (0,1) or Power exponent a > 1

  static ToleranceSchedule exact() { return {}; }
  static ToleranceSchedule geometric(double eps0, double r) {
    if (!(eps0 > 0.0) || !(r > 0.0 && r < 1.0)) throw Error(Errc::InvalidParams, "geometric schedule needs eps0 > 0, 0 < r < 1");
    return {Kind::Geometric, eps0, r};
  }
  static ToleranceSchedule power(double eps0 = 1e-2, double a = 1.5) {
    if (!(eps0 > 0.0) || !(a > 1.0)) throw Error(Errc::InvalidParams, "power schedule needs eps0 > 0, a > 1");
    return {Kind::Power, eps0, a};
  }

  /// eps_k for k >= 1.
  double eps(int k) const {
    switch (kind) {
      case Kind::Exact: return 0.0;
      case Kind::Geometric: return eps0 * std::pow(rate, k);
      case Kind::Power: return eps0 / std::pow(static_cast<double>(k), rate);
    }
    return 0.0;
  }
  bool is_exact() const { return kind == Kind::Exact; }
};

struct StopRule {
  double kkt_tol = 1e-8;  // relative to 1 + ||b||
  int max_iter = 1000;
};

/// sGS (omega = 1) or sSOR(omega).
struct Variant {
  double omega = 1.0;
  static Variant sgs() { return {}; }
  static Variant ssor(double omega) { return {omega}; }
};

enum class Termination { Tol, MaxIter, Stall };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::Tol: return "tol";
    case Termination::MaxIter: return "max_iter";
    case Termination::Stall: return "stall";
  }
  return "?";
}

struct TraceRow {
  int k = 0;
  double F = 0.0;
  double kkt = 0.0;
  double delta_tilde = 0.0;  // ||delta~^k||
  double delta = 0.0;        // ||delta^k||
  double t = 1.0;            // t_k
  double beta = 0.0;         // beta_k
  double dist_qhat = std::numeric_limits<double>::quiet_NaN();  // ||x^k - x*||_Qhat
  double time_s = 0.0;
  // not serialized
  double eps = 0.0;         // eps_k
  double xi = 0.0;          // ||Qhat^{-1/2} Delta||
  int refinements = 0;      // rel_tol halvings used
  int reused_blocks = 0;
};

struct SolveTrace {
  std::vector<TraceRow> rows;
  Termination termination = Termination::MaxIter;
  double dist0 = std::numeric_limits<double>::quiet_NaN();  // ||x^0 - x*||_Qhat
  double delta_factor = 1.0;  // budget multiplier on ||delta^k|| (forward reuse)
  std::vector<Vec> iterates;  // x^1, x^2, ... when requested
};

struct SolveOptions {
  /// Direct: exact cycles. Iterative: each iteration starts from
  /// min(inner.rel_tol, eps_k / (t_k (1 + ||b||))) and halves until the error budget holds.
  InnerSolve inner = InnerSolve::exact();
  std::optional<double> reuse_c;
  std::optional<BlockVector> x_star;
  bool record_time = true;
  bool keep_iterates = false;
  int max_refinements = 30;
};

struct SolveResult {
  BlockVector x;
  SolveTrace trace;
};

/// Algorithm: x^k = cycle at xt^k with max(||delta~^k||, ||delta^k||) <= eps_k / t_k,
/// then xt^{k+1} = x^k + beta_k (x^k - x^{k-1}).
///
/// Under indicators xt may leave dom(p); p is only ever evaluated at x^k.
inline SolveResult solve(const CompositeQP& prob, const BlockVector& x0, const StepSchedule& steps,
                         const ToleranceSchedule& tols, const StopRule& stop, const Variant& variant = {},
                         const SolveOptions& opts = {}) {
  require_same_partition(prob.partition(), x0.partition(), "x0 does not match the problem");
  if (!(stop.kkt_tol > 0.0)) throw Error(Errc::InvalidParams, "kkt_tol must be positive");
  if (stop.max_iter < 1) throw Error(Errc::InvalidParams, "max_iter must be at least 1");
  if (!std::isfinite(prob.p().value(x0.block(0)))) throw Error(Errc::InvalidParams, "x0_1 is outside dom(p)");
  const Majorizer maj = variant.omega == 1.0 ? prob.majorizer() : prob.ssor_majorizer(variant.omega);
  const bool inexact = opts.inner.kind == InnerSolve::Kind::Iterative && !tols.is_exact();
  if (opts.reuse_c && !(*opts.reuse_c > 0.0)) throw Error(Errc::InvalidParams, "reuse constant must be positive");

  const auto clock_start = std::chrono::steady_clock::now();
  const double bnorm = prob.b().norm();
  const double kkt_target = stop.kkt_tol * (1.0 + bnorm);

  SolveResult out;
  SolveTrace& tr = out.trace;
  if (opts.reuse_c) tr.delta_factor = std::sqrt(2.0 * (1.0 + *opts.reuse_c * *opts.reuse_c));
  if (opts.x_star) tr.dist0 = maj.quad_norm(x0.data() - opts.x_star->data(), Form::Qhat);

  BlockVector x_prev = x0, x = x0, xt = x0;
  double t = 1.0;
  for (int k = 1; k <= stop.max_iter; ++k) {
    const double eps = tols.eps(k);
    const double budget = eps / t;
    CycleOptions copt;
    copt.reuse_c = opts.reuse_c;
    CycleResult cr;
    int refinements = 0;
    if (!inexact) {
      copt.inner = InnerSolve::exact();
      cr = cycle(prob, maj, xt, copt);
    } else {
      double rel = std::min(opts.inner.rel_tol, budget / (1.0 + bnorm));
      for (;;) {
        copt.inner = InnerSolve::iterative(rel, opts.inner.max_inner);
        cr = cycle(prob, maj, xt, copt);
        if (cr.delta_prime.norm() <= budget && cr.delta.norm() <= tr.delta_factor * budget) break;
        if (refinements == opts.max_refinements) {
          tr.termination = Termination::Stall;
          out.x = x;
          return out;
        }
        rel *= 0.5;
        ++refinements;
      }
    }
    x_prev = x;
    x = cr.x_plus;

    TraceRow row;
    row.k = k;
    row.F = objective(prob, x);
    row.kkt = kkt_residual(prob, x);
    row.delta_tilde = cr.delta_prime.norm();
    row.delta = cr.delta.norm();
    row.t = t;
    row.eps = eps;
    row.xi = cr.xi;
    row.refinements = refinements;
    for (const auto& st : cr.forward) row.reused_blocks += st.reused ? 1 : 0;
    if (opts.x_star) row.dist_qhat = maj.quad_norm(x.data() - opts.x_star->data(), Form::Qhat);

    // step 2; a restart sets t_{k+1} = 1 and beta_k = 0
    const double tn = steps.next(t, k);
    if (tn * tn - tn > t * t * (1.0 + 1e-15)) throw Error(Errc::InvalidParams, "step schedule violates t_{k+1}^2 - t_{k+1} <= t_k^2");
    const double beta = steps.restarts_at(k) ? 0.0 : (t - 1.0) / tn;
    row.beta = beta;
    if (opts.record_time)
      row.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    tr.rows.push_back(row);
    if (opts.keep_iterates) tr.iterates.push_back(x.data());

    if (row.kkt <= kkt_target) {
      tr.termination = Termination::Tol;
      out.x = x;
      return out;
    }
    xt = BlockVector(prob.partition(), x.data() + beta * (x.data() - x_prev.data()));
    t = tn;
  }
  tr.termination = Termination::MaxIter;
  out.x = x;
  return out;
}

/// ||B||_2 = 1 - lambda_min(Qhat^{-1} Q), B = I - Qhat^{-1/2} Q Qhat^{-1/2}.
inline double contraction_factor(const Majorizer& maj) {
  Mat q = maj.base().densify();
  const Vec lq = oracle::eig(q).values;
  const double qn = std::max(std::abs(lq(0)), std::abs(lq(lq.size() - 1)));
  if (!(lq(0) > 1e-10 * qn)) throw Error(Errc::NotPD, "Q is not positive definite");
  const Vec lam = oracle::generalized_eigenvalues(q, maj.densify(Form::Qhat));
  return std::max(0.0, 1.0 - lam(0));
}

/// M = 2 ||(rho Dh)^{-1/2}||_2 + ||Qhat^{-1/2}||_2.
inline double error_constant(const Majorizer& maj) {
  const double dmin = oracle::eig(maj.rho() * maj.dense_dhat()).values(0);
  const double qmin = oracle::eig(maj.densify(Form::Qhat)).values(0);
  if (!(dmin > 0.0) || !(qmin > 0.0)) throw Error(Errc::NotPD, "majorizer is not positive definite");
  return 2.0 / std::sqrt(dmin) + 1.0 / std::sqrt(qmin);
}

struct SsorRate {
  double gamma = 0.0;       // lambda_min(Q, D)
  double Gamma = 0.0;       // 4 lambda_max((D/2 + U) D^{-1} (D/2 + U^*), Q)
  double omega_star = 1.0;  // 2 / (1 + sqrt(gamma Gamma))
  double bound = 0.0;       // (1 - sqrt(gamma/Gamma)) / (1 + sqrt(gamma/Gamma))

  /// 1 - 2 tb / (tb^2/gamma + tb + Gamma/4), tb = 1/omega - 1/2.
  double bound_at(double omega) const {
    const double tb = 1.0 / omega - 0.5;
    return 1.0 - 2.0 * tb / (tb * tb / gamma + tb + 0.25 * Gamma);
  }
};

inline SsorRate ssor_rate_constants(const BlockSymOperator& q) {
  Mat qd = q.densify(), d = q.dense_diag(), u = q.dense_upper();
  const Vec lq = oracle::eig(qd).values;
  if (!(lq(0) > 1e-10 * std::abs(lq(lq.size() - 1)))) throw Error(Errc::NotPD, "Q is not positive definite");
  Mat half = 0.5 * d + u;
  Mat w = half * d.inverse() * half.transpose();
  SsorRate r;
  r.gamma = oracle::generalized_eigenvalues(qd, d)(0);
  const Vec gw = oracle::generalized_eigenvalues(w, qd);
  r.Gamma = 4.0 * gw(gw.size() - 1);
  const double g = std::sqrt(r.gamma / r.Gamma);
  r.omega_star = 2.0 / (1.0 + std::sqrt(r.gamma * r.Gamma));
  r.bound = (1.0 - g) / (1.0 + g);
  return r;
}

struct CertificateRow {
  int k = 0;
  double gap = 0.0;      // F(x^k) - F*
  double bound_a = kInf;
  double bound_b = kInf;
  double dist = 0.0;     // ||x^k - x*||_Qhat
  double bound_rate = kInf;
  bool ok = true;
};

struct CertificateReport {
  bool applies_a = false, applies_b = false, applies_rate = false;
  double M = 0.0;
  double B = std::numeric_limits<double>::quiet_NaN();
  int violations_a = 0, violations_b = 0, violations_rate = 0;
  std::vector<CertificateRow> rows;

  bool ok() const { return violations_a == 0 && violations_b == 0 && violations_rate == 0; }
};

/// Evaluates the O(1/k^2), O(1/k) and linear-rate bounds on every trace row.
/// A bound is violated when lhs > rhs (1 + 1e-8) + floor, where the floor is
/// a few ulps of the compared quantities.
inline CertificateReport complexity_certificates(const SolveTrace& trace, const CompositeQP& prob,
                                                 const Majorizer& maj, const oracle::Optimum& opt, double M,
                                                 const StepSchedule& schedule) {
  require_same_partition(prob.partition(), opt.x.partition(), "x* does not match the problem");
  CertificateReport rep;
  rep.M = M;
  if (trace.rows.empty()) return rep;
  if (!std::isfinite(trace.dist0)) throw Error(Errc::InvalidParams, "trace was recorded without x*");
  rep.applies_a = schedule.kind == StepSchedule::Kind::Nesterov;
  rep.applies_b = schedule.kind == StepSchedule::Kind::Constant;
  if (rep.applies_b) {
    try {
      rep.B = contraction_factor(maj);
      rep.applies_rate = true;
    } catch (const Error& e) {
      if (e.code() != Errc::NotPD) throw;
    }
  }
  constexpr double rel = 1e-8;
  constexpr double ulp = 64.0 * std::numeric_limits<double>::epsilon();
  const double fstar = opt.F;
  const double xs_norm = maj.quad_norm(opt.x, Form::Qhat);
  double sum_eps = 0.0, sum_ieps = 0.0, rate = trace.dist0;
  for (const auto& r : trace.rows) {
    CertificateRow c;
    c.k = r.k;
    // realized budget: eps_k scaled as in the solve
    const double e = r.eps * trace.delta_factor;
    sum_eps += e;
    sum_ieps += r.k * e;
    c.gap = r.F - fstar;
    const double ffloor = ulp * (1.0 + std::abs(fstar) + std::abs(r.F));
    if (rep.applies_a) {
      const double eb = 2.0 * M * sum_eps;
      c.bound_a = 2.0 / ((r.k + 1.0) * (r.k + 1.0)) * (trace.dist0 + eb) * (trace.dist0 + eb);
      if (c.gap > c.bound_a * (1.0 + rel) + ffloor) {
        c.ok = false;
        ++rep.violations_a;
      }
    }
    if (rep.applies_b) {
      const double et = 4.0 * M * sum_ieps;
      c.bound_b = 1.0 / (2.0 * r.k) * (trace.dist0 + et) * (trace.dist0 + et);
      if (c.gap > c.bound_b * (1.0 + rel) + ffloor) {
        c.ok = false;
        ++rep.violations_b;
      }
    }
    if (rep.applies_rate) {
      rate = rep.B * rate + M * e;
      c.dist = r.dist_qhat;
      c.bound_rate = rate;
      if (c.dist > rate * (1.0 + rel) + ulp * (1.0 + xs_norm)) {
        c.ok = false;
        ++rep.violations_rate;
      }
    }
    rep.rows.push_back(c);
  }
  return rep;
}

}  // namespace sgsqp
