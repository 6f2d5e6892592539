#pragma once

#include <vector>

#include "sgsqp/majorizer.hpp"
#include "sgsqp/prox.hpp"

namespace sgsqp {

/// min F(x) = p(x_1) + 1/2 <x, Q x> - <b, x>, optionally with proximal
/// shifts J_1..J_s used by every cycle on this problem.
class CompositeQP {
 public:
  CompositeQP() = default;

  CompositeQP(BlockSymOperator q, BlockVector b, ProxSpec p = ProxSpec::zero(), std::vector<Mat> shifts = {})
      : q_(std::move(q)), b_(std::move(b)), p_(std::move(p)), shifts_(std::move(shifts)) {
    require_same_partition(q_.partition(), b_.partition(), "b does not match the partition of Q");
    p_.validate(q_.partition().dim(0));
    maj_ = Majorizer(q_, 1.0, shifts_);
  }

  const BlockSymOperator& Q() const { return q_; }
  const BlockVector& b() const { return b_; }
  const ProxSpec& p() const { return p_; }
  const std::vector<Mat>& shifts() const { return shifts_; }
  const BlockPartition& partition() const { return q_.partition(); }

  /// The (possibly shifted) sGS majorizer used by `sgs_cycle`.
  const Majorizer& majorizer() const { return maj_; }

  /// Majorizer of the sSOR cycle with the same shifts.
  Majorizer ssor_majorizer(double omega) const { return Majorizer(q_, omega, shifts_); }

  /// Same problem with a different linear term.
  CompositeQP with_b(BlockVector b) const {
    CompositeQP c = *this;
    require_same_partition(q_.partition(), b.partition(), "b does not match the partition of Q");
    c.b_ = std::move(b);
    return c;
  }

 private:
  BlockSymOperator q_;
  BlockVector b_;
  ProxSpec p_;
  std::vector<Mat> shifts_;
  Majorizer maj_;
};

/// F(x); +inf when an indicator is violated.
inline double objective(const CompositeQP& prob, const Vec& x) {
  const auto& part = prob.partition();
  const double pv = prob.p().value(x.segment(0, part.dim(0)));
  if (!std::isfinite(pv)) return pv;
  return pv + 0.5 * x.dot(prob.Q().apply(x)) - prob.b().data().dot(x);
}
inline double objective(const CompositeQP& prob, const BlockVector& x) { return objective(prob, x.data()); }

/// Distance of b - Qx to dp(x_1) x {0} x ... x {0}.
inline double kkt_residual(const CompositeQP& prob, const Vec& x) {
  const auto& part = prob.partition();
  Vec g = prob.b().data() - prob.Q().apply(x);
  const double r1 = subgrad_residual(prob.p(), x.segment(0, part.dim(0)), g.segment(0, part.dim(0)));
  if (!std::isfinite(r1)) return r1;
  const double rest = g.tail(part.total() - part.dim(0)).squaredNorm();
  return std::sqrt(r1 * r1 + rest);
}
inline double kkt_residual(const CompositeQP& prob, const BlockVector& x) { return kkt_residual(prob, x.data()); }

}  // namespace sgsqp
