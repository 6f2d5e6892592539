#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace sgsqp;
using namespace sgsqp::testing;

TEST(Oracle, SubproblemRunningInstance) {
  auto prob = running_problem();
  BlockVector z(two_by_two());
  Vec x = oracle::dense_subproblem_solve(prob, z, z).data();
  EXPECT_NEAR(x(0), 0.25, 1e-14);
  EXPECT_NEAR(x(1), 0.375, 1e-14);
}

TEST(Oracle, SubproblemFixedPointAtOptimum) {
  for (int t = 0; t < 10; ++t) {
    auto prob = random_problem(3000 + t, 2 + t % 4, 4, t % 2 ? "l1" : "zero");
    auto opt = oracle::dense_optimum(prob);
    Vec x = oracle::dense_subproblem_solve(prob, opt.x, BlockVector(prob.partition())).data();
    EXPECT_LE(rel_err(x, opt.x.data()), 1e-9);
  }
}

TEST(Oracle, SubproblemMatchesInexactCycle) {
  std::mt19937_64 rng(43);
  for (int t = 0; t < 20; ++t) {
    auto prob = random_problem(3100 + t, 2 + t % 5, 5, t % 3 == 0 ? "nonneg" : "l1");
    BlockVector xb(prob.partition(), random_vec(rng, prob.partition().total()));
    CycleOptions o;
    o.inner = InnerSolve::iterative(1e-2, 4);
    auto r = sgs_cycle(prob, xb, o);
    Vec ref = oracle::dense_subproblem_solve(prob, xb, r.Delta).data();
    EXPECT_LE(rel_err(r.x_plus.data(), ref), 1e-9);
  }
}

TEST(Oracle, OptimumExamples) {
  auto prob = running_problem();
  auto opt = oracle::dense_optimum(prob);
  EXPECT_NEAR(opt.x.data()(0), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(opt.x.data()(1), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(opt.F, -1.0 / 3.0, 1e-14);

  CompositeQP orth(BlockSymOperator::from_dense(two_by_two(), Mat::Identity(2, 2)), bv(two_by_two(), {-1, 1}),
                   ProxSpec::nonneg());
  auto o2 = oracle::dense_optimum(orth);
  EXPECT_LE((o2.x.data() - (Vec(2) << 0, 1).finished()).norm(), 1e-12);
  EXPECT_NEAR(o2.F, -0.5, 1e-12);

  CompositeQP zero_b(running_q(), BlockVector(two_by_two()));
  auto o3 = oracle::dense_optimum(zero_b);
  EXPECT_EQ(o3.x.norm(), 0.0);
  EXPECT_EQ(o3.F, 0.0);
}

TEST(Oracle, OptimumKktAccuracy) {
  for (int t = 0; t < 20; ++t) {
    const char* px[] = {"zero", "l1", "nonneg", "box"};
    auto prob = random_problem(3200 + t, 2 + t % 5, 5, px[t % 4]);
    auto opt = oracle::dense_optimum(prob);
    EXPECT_LE(kkt_residual(prob, opt.x), 1e-11 * (1.0 + prob.b().norm()));
  }
}

TEST(Oracle, SingularMinimumNorm) {
  GenParams gp;
  gp.dims = {2, 2, 2};
  gp.singular = true;
  gp.seed = 8;
  auto prob = generate(gp).problem();
  auto opt = oracle::dense_optimum(prob);
  EXPECT_LE(kkt_residual(prob, opt.x), 1e-10);
  // orthogonal to the kernel
  auto e = oracle::eig(prob.Q().densify());
  EXPECT_LE(std::abs(e.vectors.col(0).dot(opt.x.data())), 1e-9);
}

TEST(Oracle, EigenTools) {
  EXPECT_LE((oracle::eig(Mat::Identity(3, 3)).values - Vec::Ones(3)).norm(), 1e-15);
  EXPECT_EQ(oracle::eig(Mat::Zero(2, 2)).values.norm(), 0.0);
  Majorizer m = sgs_operator(running_q());
  Vec g = oracle::generalized_eigenvalues(running_q().densify(), m.densify(Form::Qhat));
  EXPECT_NEAR(g(0), 0.75, 1e-14);
  EXPECT_NEAR(g(1), 1.0, 1e-14);
}
