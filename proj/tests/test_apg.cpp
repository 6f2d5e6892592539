#include <gtest/gtest.h>

#include <iostream>

#include "helpers.hpp"

using namespace sgsqp;
using namespace sgsqp::testing;

namespace {

SolveResult exact_constant(const CompositeQP& prob, const BlockVector& x0, double tol, int max_iter,
                           SolveOptions opts = {}) {
  return solve(prob, x0, StepSchedule::constant(), ToleranceSchedule::exact(), StopRule{tol, max_iter}, {}, opts);
}

}  // namespace

TEST(Solve, RunningInstanceMatchesClassicalIterates) {
  auto prob = running_problem();
  SolveOptions o;
  o.keep_iterates = true;
  auto res = exact_constant(prob, BlockVector(two_by_two()), 1e-10 / (1.0 + std::sqrt(2.0)), 60, o);
  ASSERT_EQ(res.trace.termination, Termination::Tol);
  EXPECT_LE(res.trace.rows.size(), 60u);
  EXPECT_LE(res.trace.rows.back().kkt, 1e-10);
  EXPECT_NEAR(res.x.data()(0), 1.0 / 3.0, 1e-10);
  EXPECT_NEAR(res.x.data()(1), 1.0 / 3.0, 1e-10);
  BlockVector xk(two_by_two());
  for (const Vec& it : res.trace.iterates) {
    xk = classical_sgs_step(prob.Q(), prob.b(), xk);
    EXPECT_LE(rel_err(it, xk.data()), 1e-12);
  }
}

TEST(Solve, StartAtOptimumStopsAtFirstIteration) {
  auto prob = running_problem();
  auto res = exact_constant(prob, bv(two_by_two(), {1.0 / 3.0, 1.0 / 3.0}), 1e-10, 100);
  EXPECT_EQ(res.trace.rows.size(), 1u);
  EXPECT_EQ(res.trace.termination, Termination::Tol);
}

TEST(Solve, MaxIterTermination) {
  auto res = exact_constant(running_problem(), BlockVector(two_by_two()), 1e-14, 1);
  EXPECT_EQ(res.trace.termination, Termination::MaxIter);
  EXPECT_EQ(res.trace.rows.size(), 1u);
}

TEST(Solve, InvalidInputs) {
  auto prob = running_problem();
  BlockVector x0(two_by_two());
  EXPECT_THROW(exact_constant(prob, x0, 0.0, 10), Error);
  EXPECT_THROW(exact_constant(prob, x0, 1e-8, 0), Error);
  EXPECT_THROW(StepSchedule::restart(0), Error);
  EXPECT_THROW(ToleranceSchedule::geometric(1.0, 1.0), Error);
  EXPECT_THROW(ToleranceSchedule::power(1.0, 1.0), Error);
  Mat q(2, 2);
  q << 1, 0, 0, 1;
  CompositeQP orth(BlockSymOperator::from_dense(two_by_two(), q), bv(two_by_two(), {1, 1}), ProxSpec::nonneg());
  EXPECT_THROW(exact_constant(orth, bv(two_by_two(), {-1, 0}), 1e-8, 10), Error);
}

TEST(Solve, RestartSchedule) {
  auto prob = random_problem(2000, 3, 4);
  auto res = solve(prob, BlockVector(prob.partition()), StepSchedule::restart(5), ToleranceSchedule::exact(),
                   StopRule{1e-10, 200});
  EXPECT_EQ(res.trace.termination, Termination::Tol);
  for (const auto& r : res.trace.rows) {
    if (r.k % 5 == 0) {
      EXPECT_EQ(r.beta, 0.0);
    }
    if (r.k % 5 == 1) {
      EXPECT_EQ(r.t, 1.0);
    }
  }
}

TEST(Solve, NesterovStepRecursion) {
  auto prob = random_problem(2001, 3, 4);
  auto res = solve(prob, BlockVector(prob.partition()), StepSchedule::nesterov(), ToleranceSchedule::exact(),
                   StopRule{1e-12, 30});
  for (std::size_t i = 1; i < res.trace.rows.size(); ++i) {
    const double t0 = res.trace.rows[i - 1].t, t1 = res.trace.rows[i].t;
    EXPECT_NEAR(t1 * t1 - t1, t0 * t0, 1e-9 * t0 * t0);
    EXPECT_NEAR(res.trace.rows[i - 1].beta, (t0 - 1.0) / t1, 1e-15);
  }
}

TEST(Solve, InexactRespectsErrorCondition) {
  for (int t = 0; t < 10; ++t) {
    auto prob = random_problem(2100 + t, 4, 6, t % 2 ? "l1" : "zero");
    SolveOptions o;
    o.inner = InnerSolve::iterative(1e-1, 50);
    auto res = solve(prob, BlockVector(prob.partition()), StepSchedule::nesterov(), ToleranceSchedule::power(1e-2, 1.5),
                     StopRule{1e-8, 2000}, {}, o);
    EXPECT_EQ(res.trace.termination, Termination::Tol);
    for (const auto& r : res.trace.rows) {
      EXPECT_LE(r.delta_tilde, r.eps / r.t);
      EXPECT_LE(r.delta, r.eps / r.t);
    }
  }
}

TEST(Solve, StallWhenInnerSolverCannotMeetBudget) {
  GenParams gp;
  gp.dims = {6, 6, 6};
  gp.kappa = 1e4;
  gp.seed = 9;
  auto prob = generate(gp).problem();
  SolveOptions o;
  o.inner = InnerSolve::iterative(1e-1, 1);
  o.max_refinements = 2;
  auto res = solve(prob, BlockVector(prob.partition()), StepSchedule::constant(), ToleranceSchedule::geometric(1e-12, 0.5),
                   StopRule{1e-12, 10}, {}, o);
  EXPECT_EQ(res.trace.termination, Termination::Stall);
}

TEST(Objective, Examples) {
  auto prob = running_problem();
  EXPECT_EQ(objective(prob, BlockVector(two_by_two())), 0.0);
  EXPECT_NEAR(objective(prob, bv(two_by_two(), {1.0 / 3.0, 1.0 / 3.0})), -1.0 / 3.0, 1e-15);
  auto orth = running_problem(ProxSpec::nonneg());
  EXPECT_TRUE(std::isinf(objective(orth, bv(two_by_two(), {-0.1, 0}))));
}

TEST(KktResidual, Examples) {
  auto prob = running_problem();
  EXPECT_LE(kkt_residual(prob, bv(two_by_two(), {1.0 / 3.0, 1.0 / 3.0})), 1e-15);
  EXPECT_NEAR(kkt_residual(prob, BlockVector(two_by_two())), std::sqrt(2.0), 1e-15);
  for (int t = 0; t < 5; ++t) {
    auto l1 = random_problem(2200 + t, 3, 4, "l1");
    auto opt = oracle::dense_optimum(l1);
    EXPECT_LE(kkt_residual(l1, opt.x), 1e-8);
  }
}

TEST(ContractionFactor, Examples) {
  EXPECT_NEAR(contraction_factor(sgs_operator(running_q())), 0.25, 1e-12);
  Mat q = Mat::Zero(3, 3);
  q << 2, 0.5, 0, 0.5, 3, 0, 0, 0, 4;
  EXPECT_LE(contraction_factor(sgs_operator(BlockSymOperator::from_dense(BlockPartition({2, 1}), q))), 1e-12);
  GenParams gp;
  gp.dims = {2, 2, 2};
  gp.singular = true;
  auto sing = generate(gp).problem();
  try {
    contraction_factor(sing.majorizer());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotPD);
  }
}

TEST(Certificates, ExactConstantPositiveDefinite) {
  for (int t = 0; t < 10; ++t) {
    auto prob = random_problem(2300 + t, 2 + t % 5, 5);
    auto opt = oracle::dense_optimum(prob);
    SolveOptions o;
    o.x_star = opt.x;
    auto res = exact_constant(prob, BlockVector(prob.partition()), 1e-10, 500, o);
    auto rep = complexity_certificates(res.trace, prob, prob.majorizer(), opt, error_constant(prob.majorizer()),
                                       StepSchedule::constant());
    EXPECT_TRUE(rep.applies_b);
    EXPECT_TRUE(rep.applies_rate);
    EXPECT_FALSE(rep.applies_a);
    EXPECT_TRUE(rep.ok());
  }
}

TEST(Certificates, NesterovInexact) {
  for (int t = 0; t < 10; ++t) {
    auto prob = random_problem(2400 + t, 2 + t % 5, 5, t % 2 ? "l1" : "nonneg");
    auto opt = oracle::dense_optimum(prob);
    SolveOptions o;
    o.x_star = opt.x;
    o.inner = InnerSolve::iterative(1e-1, 50);
    auto res = solve(prob, BlockVector(prob.partition()), StepSchedule::nesterov(), ToleranceSchedule::power(1e-2, 1.5),
                     StopRule{1e-9, 2000}, {}, o);
    auto rep = complexity_certificates(res.trace, prob, prob.majorizer(), opt, error_constant(prob.majorizer()),
                                       StepSchedule::nesterov());
    EXPECT_TRUE(rep.applies_a);
    EXPECT_TRUE(rep.ok());
  }
}

TEST(Certificates, SingularQConstant) {
  GenParams gp;
  gp.dims = {2, 3, 2};
  gp.singular = true;
  gp.seed = 4;
  auto prob = generate(gp).problem();
  auto opt = oracle::dense_optimum(prob);
  SolveOptions o;
  o.x_star = opt.x;
  auto res = exact_constant(prob, BlockVector(prob.partition()), 1e-10, 2000, o);
  auto rep = complexity_certificates(res.trace, prob, prob.majorizer(), opt, error_constant(prob.majorizer()),
                                     StepSchedule::constant());
  EXPECT_TRUE(rep.applies_b);
  EXPECT_FALSE(rep.applies_rate);
  EXPECT_EQ(rep.violations_b, 0);
}

TEST(Certificates, EmptyTrace) {
  auto prob = running_problem();
  auto opt = oracle::dense_optimum(prob);
  SolveTrace empty;
  auto rep = complexity_certificates(empty, prob, prob.majorizer(), opt, 1.0, StepSchedule::constant());
  EXPECT_TRUE(rep.rows.empty());
  EXPECT_TRUE(rep.ok());
}

TEST(Certificates, RequiresOptimumDistance) {
  auto prob = running_problem();
  auto opt = oracle::dense_optimum(prob);
  auto res = exact_constant(prob, BlockVector(two_by_two()), 1e-8, 10);
  EXPECT_THROW(complexity_certificates(res.trace, prob, prob.majorizer(), opt, 1.0, StepSchedule::constant()), Error);
}

TEST(Solve, ConstantScheduleMonotone) {
  for (int t = 0; t < 20; ++t) {
    auto prob = random_problem(2500 + t, 2 + t % 5, 5, t % 2 ? "l1" : "zero");
    auto res = exact_constant(prob, BlockVector(prob.partition()), 1e-10, 300);
    for (std::size_t i = 1; i < res.trace.rows.size(); ++i)
      EXPECT_LE(res.trace.rows[i].F, res.trace.rows[i - 1].F + 1e-12 * (1.0 + std::abs(res.trace.rows[i - 1].F)));
  }
}

TEST(Solve, NesterovVersusConstantReport) {
  int fewer_or_equal = 0, total = 0;
  for (int t = 0; t < 50; ++t) {
    auto prob = random_problem(2600 + t, 3, 4, "l1");
    auto opt = oracle::dense_optimum(prob);
    auto iters_to_gap = [&](const StepSchedule& st) {
      auto res = solve(prob, BlockVector(prob.partition()), st, ToleranceSchedule::exact(), StopRule{1e-13, 3000});
      for (const auto& r : res.trace.rows)
        if (r.F - opt.F <= 1e-8) return r.k;
      return 1 << 30;
    };
    const int a = iters_to_gap(StepSchedule::nesterov()), b = iters_to_gap(StepSchedule::constant());
    fewer_or_equal += a <= b ? 1 : 0;
    ++total;
  }
  std::cout << "nesterov needed no more iterations than constant on " << fewer_or_equal << "/" << total
            << " instances\n";
  SUCCEED();
}

TEST(SsorRate, ConstantsAndBound) {
  GenParams gp;
  gp.kind = GenParams::Kind::Laplace;
  gp.dims = {4, 4, 4, 4};
  auto prob = generate(gp).problem();
  auto r = ssor_rate_constants(prob.Q());
  EXPECT_GT(r.gamma, 0.0);
  EXPECT_GT(r.omega_star, 0.0);
  EXPECT_LT(r.omega_star, 2.0);
  EXPECT_NEAR(r.bound_at(r.omega_star), r.bound, 1e-12);
  for (double w : {1.0, 1.2, 1.5, 1.8})
    EXPECT_GE(r.bound_at(w), r.bound - 1e-12);
}
