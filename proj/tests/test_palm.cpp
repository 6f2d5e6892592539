#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace sgsqp;
using namespace sgsqp::testing;

namespace {

LinConQP lincon_instance(std::uint64_t seed, std::vector<Index> dims, const std::string& prox = "zero") {
  GenParams gp;
  gp.kind = GenParams::Kind::Lincon;
  gp.dims = std::move(dims);
  gp.prox = prox;
  gp.seed = seed;
  return *generate(gp).lincon;
}

QsdpData qsdp_instance(std::uint64_t seed, Index n, Index p, Index rank = -1) {
  GenParams gp;
  gp.kind = GenParams::Kind::Qsdp;
  gp.qsdp_n = n;
  gp.qsdp_p = p;
  gp.qsdp_rank = rank;
  gp.seed = seed;
  return *generate(gp).qsdp;
}

/// [P A^T; A 0][x; y] = [g; d]
std::pair<Vec, Vec> dense_kkt(const LinConQP& lp) {
  const Index n = lp.P.rows(), m = lp.A.rows();
  Mat k = Mat::Zero(n + m, n + m);
  k.topLeftCorner(n, n) = lp.P;
  k.topRightCorner(n, m) = lp.A.transpose();
  k.bottomLeftCorner(m, n) = lp.A;
  Vec r(n + m);
  r << lp.g.data(), lp.d;
  Vec s = k.fullPivLu().solve(r);
  return {s.head(n), s.tail(m)};
}

}  // namespace

TEST(Palm, IdentityConstraintProjection) {
  BlockPartition part({2, 2});
  LinConQP lp;
  lp.partition = part;
  lp.P = Mat::Zero(4, 4);
  lp.A = Mat::Identity(4, 4);
  lp.g = BlockVector(part);
  lp.d = (Vec(4) << 1, -2, 3, 0.5).finished();
  auto res = palm_solve(lp, 1.0, 1.6, BlockVector(part), Vec(Vec::Zero(4)));
  EXPECT_EQ(res.termination, Termination::Tol);
  EXPECT_LE(res.rows.size(), 200u);
  EXPECT_LE((res.x.data() - lp.d).norm(), 1e-8);
}

TEST(Palm, KktPointIsStationary) {
  auto lp = lincon_instance(3, {2, 3, 2});
  auto [xs, ys] = dense_kkt(lp);
  PalmOptions o;
  o.tol = 1e-30;
  o.max_iter = 5;
  auto res = palm_solve(lp, 1.0, 1.6, BlockVector(lp.partition, xs), ys, o);
  EXPECT_LE((res.x.data() - xs).norm(), 1e-10 * (1.0 + xs.norm()));
  EXPECT_LE((res.y - ys).norm(), 1e-10 * (1.0 + ys.norm()));
}

TEST(Palm, RandomThreeBlockMatchesDenseKkt) {
  for (int t = 0; t < 5; ++t) {
    auto lp = lincon_instance(10 + t, {3, 2, 3});
    auto [xs, ys] = dense_kkt(lp);
    PalmOptions o;
    o.tol = 1e-9;
    auto res = palm_solve(lp, 1.0, 1.0, BlockVector(lp.partition), Vec(Vec::Zero(lp.A.rows())), o);
    ASSERT_EQ(res.termination, Termination::Tol);
    EXPECT_LE(res.rows.back().kkt, 1e-6);
    EXPECT_LE((res.x.data() - xs).norm(), 1e-6 * (1.0 + xs.norm()));
  }
}

TEST(Palm, TauValuesConverge) {
  for (double tau : {1.0, 1.6, 1.9}) {
    for (int t = 0; t < 3; ++t) {
      auto lp = lincon_instance(20 + t, {2, 2, 3}, t == 2 ? "nonneg" : "zero");
      PalmOptions o;
      o.tol = 1e-7;
      auto res = palm_solve(lp, 1.0, tau, BlockVector(lp.partition), Vec(Vec::Zero(lp.A.rows())), o);
      EXPECT_EQ(res.termination, Termination::Tol) << tau << " " << t;
    }
  }
}

TEST(Palm, MultiplierWithPreviousIterate) {
  // the lagged step is not covered by the tau in (0, 2) range; a short step converges
  auto lp = lincon_instance(30, {2, 3});
  PalmOptions o;
  o.multiplier_uses_previous = true;
  o.tol = 1e-7;
  auto res = palm_solve(lp, 1.0, 0.5, BlockVector(lp.partition), Vec(Vec::Zero(lp.A.rows())), o);
  EXPECT_EQ(res.termination, Termination::Tol);
}

TEST(Palm, TauOutOfRange) {
  auto lp = lincon_instance(31, {2, 2});
  for (double tau : {0.0, 2.0, -1.0}) {
    try {
      palm_solve(lp, 1.0, tau, BlockVector(lp.partition), Vec(Vec::Zero(lp.A.rows())));
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::TauOutOfRange);
    }
  }
}

TEST(Palm, NonsmoothGetsConservativeShift) {
  auto lp = lincon_instance(32, {3, 2}, "l1");
  PalmOptions o;
  o.max_iter = 3;
  auto res = palm_solve(lp, 1.0, 1.6, BlockVector(lp.partition), Vec(Vec::Zero(lp.A.rows())), o);
  EXPECT_TRUE(res.shifted);
}

TEST(Palm, LagrangianTwoWays) {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 20; ++t) {
    auto lp = lincon_instance(40 + t, {2, 3, 2});
    Vec x = random_vec(rng, lp.P.rows()), y = random_vec(rng, lp.A.rows());
    for (double sigma : {0.5, 1.0, 3.0}) {
      const double a = lagrangian(lp, sigma, x, y), b = lagrangian_expanded(lp, sigma, x, y);
      EXPECT_NEAR(a, b, 1e-10 * (1.0 + std::abs(a)));
    }
  }
}

TEST(Qsdp, IdentityHAssembly) {
  QsdpData qd;
  qd.n = 2;
  qd.H = Mat::Identity(3, 3);
  qd.B = (Mat(1, 3) << 1, 0.5, -1).finished();
  qd.h = Vec::Constant(1, 0.7);
  qd.C = (Mat(2, 2) << 1, 0.2, 0.2, -1).finished();
  const double sigma = 1.3;
  Vec y = (Vec(3) << 0.1, 0.2, 0.3).finished();
  auto sp = qsdp_assemble(qd, sigma, y);
  ASSERT_EQ(sp.problem.partition().blocks(), 3);
  const Mat& V = sp.range.V;
  EXPECT_LE((sp.range.lam - Vec::Ones(3)).norm(), 1e-12);
  Mat bm = qd.B;
  Mat expect(7, 7);
  expect << Mat::Identity(3, 3), bm.transpose(), V, bm, bm * bm.transpose(), bm * V, V.transpose(),
      V.transpose() * bm.transpose(), Mat(Mat::Identity(3, 3) / sigma + Mat::Identity(3, 3));
  expect *= sigma;
  EXPECT_LE((sp.problem.Q().densify() - expect).norm(), 1e-12 * expect.norm());
  EXPECT_LE((sp.problem.Q().diag(2) - sigma * (Mat::Identity(3, 3) / sigma + Mat::Identity(3, 3))).norm(), 1e-12);
}

TEST(Qsdp, ZeroHHasTwoBlocks) {
  auto qd = qsdp_instance(1, 3, 2, 0);
  EXPECT_EQ(qd.H.norm(), 0.0);
  auto sp = qsdp_assemble(qd, 1.0, Vec(Vec::Zero(qd.m())));
  EXPECT_EQ(sp.problem.partition().blocks(), 2);
  EXPECT_EQ(qsdp_lincon(qd).partition.blocks(), 2);
}

TEST(Qsdp, AssembledOperatorIsPsd) {
  for (int t = 0; t < 10; ++t) {
    auto qd = qsdp_instance(50 + t, 2 + t % 4, 1 + t % 3, t % 2 ? 2 : -1);
    auto sp = qsdp_assemble(qd, 0.7, Vec(Vec::Zero(qd.m())));
    Mat q = sp.problem.Q().densify();
    EXPECT_LE((q - q.transpose()).norm(), 1e-12 * q.norm());
    EXPECT_TRUE(sp.problem.Q().is_psd());
  }
}

TEST(Qsdp, AssemblyMatchesLinconPenalty) {
  // qsdp_assemble is P + sigma A^* A, b = g + A^*(sigma d - Y) of the LinConQP form
  for (int t = 0; t < 5; ++t) {
    auto qd = qsdp_instance(60 + t, 3, 2, t % 2 ? 3 : -1);
    std::mt19937_64 rng(t);
    Vec y = random_vec(rng, qd.m());
    const double sigma = 1.7;
    auto sp = qsdp_assemble(qd, sigma, y);
    auto lp = qsdp_lincon(qd, sp.range);
    Mat q = lp.P + sigma * lp.A.transpose() * lp.A;
    EXPECT_LE(rel_err(sp.problem.Q().densify(), q), 1e-12);
    EXPECT_LE(rel_err(sp.problem.b().data(), penalized_rhs(lp, sigma, y).data()), 1e-12);
  }
}

TEST(Qsdp, StepMatchesGenericCycle) {
  for (int t = 0; t < 20; ++t) {
    const Index n = 2 + t % 4, p = 1 + t % 4;
    auto qd = qsdp_instance(70 + t, n, std::min(p, svec_size(n)), t % 3 == 0 ? -1 : 1 + t % 3);
    std::mt19937_64 rng(100 + t);
    const double sigma = 0.5 + 0.1 * t;
    Vec y = random_vec(rng, qd.m());
    QsdpState st{random_vec(rng, qd.m()), random_vec(rng, qd.p()), Vec(qd.H * random_vec(rng, qd.m()))};
    auto sp = qsdp_assemble(qd, sigma, y);
    auto cyc = sgs_cycle(sp.problem, qsdp_pack(sp, st));
    auto a = qsdp_unpack(sp, cyc.x_plus);
    auto b = qsdp_sgs_step(qd, sigma, st, y);
    EXPECT_LE(rel_err(b.Z, a.Z), 1e-10);
    EXPECT_LE(rel_err(b.xi, a.xi), 1e-10);
    EXPECT_LE(rel_err(b.HW, a.HW), 1e-10);
  }
}

TEST(Qsdp, StepStationaryAtSubproblemSolution) {
  auto qd = qsdp_instance(90, 3, 2);
  const double sigma = 1.0;
  Vec y = Vec::Zero(qd.m());
  auto sp = qsdp_assemble(qd, sigma, y);
  auto opt = oracle::dense_optimum(sp.problem);
  auto st = qsdp_unpack(sp, opt.x);
  auto next = qsdp_sgs_step(qd, sigma, st, y);
  EXPECT_LE(rel_err(next.Z, st.Z), 1e-8);
  EXPECT_LE(rel_err(next.xi, st.xi), 1e-8);
}

TEST(Qsdp, ZUpdateProjectsOntoCone) {
  QsdpData qd;
  qd.n = 2;
  qd.H = Mat::Zero(3, 3);
  qd.B = svec(Mat::Identity(2, 2)).transpose();
  qd.h = Vec::Zero(1);
  qd.C = (Mat(2, 2) << 1, 0, 0, -1).finished();
  QsdpState st{Vec::Zero(3), Vec::Zero(1), Vec::Zero(3)};
  auto next = qsdp_sgs_step(qd, 1.0, st, Vec(Vec::Zero(3)));
  Mat expect = Mat::Zero(2, 2);
  expect(0, 0) = 1;
  EXPECT_LE((smat(next.Z, 2) - expect).norm(), 1e-14);
}

TEST(Qsdp, PalmSolvesGeneratedInstances) {
  for (double tau : {1.0, 1.6, 1.9}) {
    auto qd = qsdp_instance(95, 3, 2, 2);
    auto lp = qsdp_lincon(qd);
    PalmOptions o;
    o.tol = 1e-6;
    auto res = palm_solve(lp, 1.0, tau, BlockVector(lp.partition), Vec(Vec::Zero(lp.A.rows())), o);
    EXPECT_EQ(res.termination, Termination::Tol) << tau;
  }
}
