// Two 1x1 blocks, Q = [[2,1],[1,2]], b = [1,1].
#include <iostream>

#include "sgsqp/sgsqp.hpp"

int main() {
  using namespace sgsqp;
  BlockPartition part({1, 1});
  Mat q(2, 2);
  q << 2, 1, 1, 2;
  BlockVector b(part, Vec::Ones(2));
  CompositeQP prob(BlockSymOperator::from_dense(part, q), b);

  CycleResult c = sgs_cycle(prob, BlockVector(part));
  std::cout << "one sGS cycle from 0: " << c.x_plus.data().transpose() << '\n';
  std::cout << "T_Q:\n" << prob.majorizer().densify(Form::T) << '\n';
  std::cout << "||B||_2 = " << contraction_factor(prob.majorizer()) << '\n';

  SolveResult r = solve(prob, BlockVector(part), StepSchedule::constant(), ToleranceSchedule::exact(), {1e-12, 100});
  std::cout << "solution " << r.x.data().transpose() << " after " << r.trace.rows.size() << " iterations, F = "
            << objective(prob, r.x) << '\n';
}
