// sgsqp: generate, solve, verify and benchmark block-sGS instances.
//
// Exit codes: 0 ok / converged, 1 error, 2 max_iter, 3 stall, 4 identity violation.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "sgsqp/sgsqp.hpp"

using namespace sgsqp;

namespace {

int log_level() {
  const char* v = std::getenv("SGSQP_LOG");
  if (!v) return 1;
  std::string s(v);
  if (s == "quiet" || s == "0") return 0;
  if (s == "debug" || s == "2") return 2;
  return 1;
}

void logf(int level, const std::string& msg) {
  if (level <= log_level()) std::cerr << msg << '\n';
}

std::vector<Index> parse_dims(const std::string& s) {
  std::vector<Index> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      long v = std::stol(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw Error(Errc::InvalidParams, "bad dimension '" + tok + "'");
    }
  }
  return out;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(std::stod(tok));
  return out;
}

// "name" or "name:value"
std::pair<std::string, std::string> split_arg(const std::string& s) {
  const auto c = s.find(':');
  if (c == std::string::npos) return {s, ""};
  return {s.substr(0, c), s.substr(c + 1)};
}

StepSchedule parse_schedule(const std::string& s) {
  auto [name, val] = split_arg(s);
  if (name == "constant") return StepSchedule::constant();
  if (name == "nesterov") return StepSchedule::nesterov();
  if (name == "restart" && !val.empty()) return StepSchedule::restart(std::stoi(val));
  throw Error(Errc::InvalidParams, "unknown schedule '" + s + "'");
}

Variant parse_variant(const std::string& s) {
  auto [name, val] = split_arg(s);
  if (name == "sgs") return Variant::sgs();
  if (name == "ssor" && !val.empty()) return Variant::ssor(std::stod(val));
  throw Error(Errc::InvalidParams, "unknown variant '" + s + "'");
}

struct SolveFlags {
  std::string instance;
  std::string schedule = "constant";
  std::string mode = "exact";
  std::string variant = "sgs";
  double eps0 = 1e-2;
  double eps_power = 1.5;
  double kkt_tol = 1e-8;
  int max_iter = 1000;
  std::string trace;
  std::optional<std::uint64_t> seed;
  bool no_time = false;
  std::optional<double> reuse;
  double sigma = 1.0;
  double tau = 1.6;
  bool multiplier_previous = false;
};

int exit_code(Termination t) {
  switch (t) {
    case Termination::Tol: return 0;
    case Termination::MaxIter: return 2;
    case Termination::Stall: return 3;
  }
  return 1;
}

BlockVector start_point(const CompositeQP& prob, std::optional<std::uint64_t> seed) {
  BlockVector x0(prob.partition());
  if (!seed) return x0;
  std::mt19937_64 rng(*seed);
  std::normal_distribution<double> nd;
  for (Index i = 0; i < x0.size(); ++i) x0.data()(i) = nd(rng);
  x0.block(0) = prox(prob.p(), 1.0, Vec(x0.block(0)));
  return x0;
}

int run_palm(const LinConQP& lp, const SolveFlags& f, const std::string& label) {
  PalmOptions po;
  po.tol = f.kkt_tol;
  po.max_iter = f.max_iter;
  po.multiplier_uses_previous = f.multiplier_previous;
  po.record_time = !f.no_time;
  auto [mode, val] = split_arg(f.mode);
  if (mode == "inexact") po.inner = InnerSolve::iterative(val.empty() ? 1e-6 : std::stod(val));
  else if (mode != "exact") throw Error(Errc::InvalidParams, "unknown mode '" + f.mode + "'");
  BlockVector x0(lp.partition);
  Vec y0 = Vec::Zero(lp.A.rows());
  PalmResult r = palm_solve(lp, f.sigma, f.tau, x0, y0, po);
  if (!f.trace.empty()) save_csv(f.trace, r, write_palm_csv);
  const auto& last = r.rows.back();
  std::cout << label << " palm iterations=" << r.rows.size() << " termination=" << to_string(r.termination)
            << " primal_inf=" << detail::csv_num(last.primal_inf) << " kkt=" << detail::csv_num(last.kkt)
            << " F=" << detail::csv_num(last.F) << '\n';
  return exit_code(r.termination);
}

int cmd_solve(const SolveFlags& f) {
  Instance inst = load_instance(f.instance);
  if (!inst.has_qp()) {
    if (inst.qsdp) return run_palm(qsdp_lincon(*inst.qsdp), f, "qsdp");
    if (inst.lincon) return run_palm(*inst.lincon, f, "lincon");
    throw Error(Errc::ParseError, "instance contains no problem");
  }
  CompositeQP prob = inst.problem();
  StepSchedule steps = parse_schedule(f.schedule);
  Variant var = parse_variant(f.variant);
  SolveOptions so;
  so.record_time = !f.no_time;
  so.reuse_c = f.reuse;
  ToleranceSchedule tols = ToleranceSchedule::exact();
  auto [mode, val] = split_arg(f.mode);
  if (mode == "inexact") {
    so.inner = InnerSolve::iterative(val.empty() ? 1e-2 : std::stod(val));
    tols = ToleranceSchedule::power(f.eps0, f.eps_power);
  } else if (mode != "exact") {
    throw Error(Errc::InvalidParams, "unknown mode '" + f.mode + "'");
  }
  SolveResult r = solve(prob, start_point(prob, f.seed), steps, tols, {f.kkt_tol, f.max_iter}, var, so);
  if (!f.trace.empty()) save_csv(f.trace, r.trace, write_trace_csv);
  if (log_level() >= 2)
    for (const auto& row : r.trace.rows)
      logf(2, "k=" + std::to_string(row.k) + " F=" + detail::csv_num(row.F) + " kkt=" + detail::csv_num(row.kkt));
  const double kkt = r.trace.rows.empty() ? kkt_residual(prob, r.x) : r.trace.rows.back().kkt;
  std::cout << "iterations=" << r.trace.rows.size() << " termination=" << to_string(r.trace.termination)
            << " F=" << detail::csv_num(objective(prob, r.x)) << " kkt=" << detail::csv_num(kkt)
            << " kkt_target=" << detail::csv_num(f.kkt_tol * (1.0 + prob.b().norm())) << '\n';
  return exit_code(r.trace.termination);
}

// ---- verify ---------------------------------------------------------------

struct Check {
  std::string name;
  double error;
  double threshold;
  bool ok() const { return error <= threshold; }
};

std::vector<Check> operator_checks(const BlockSymOperator& q, bool corrupt) {
  std::vector<Check> out;
  Mat qd = q.densify(), d = q.dense_diag(), u = q.dense_upper();
  for (double omega : {1.0, 1.25, 1.5, 1.9}) {
    Majorizer maj(q, omega);
    const double tau = maj.tau(), rho = maj.rho();
    Mat qhat = maj.densify(Form::Qhat);
    if (corrupt) qhat(0, 0) += 1e-6 * qhat.norm();
    Mat left = tau * d + u;
    Mat formula = left * (rho * d).inverse() * left.transpose();
    Mat tl = (1.0 - tau) * d + u;
    Mat tsor = tl * (rho * d).inverse() * tl.transpose();
    const double qn = qhat.norm();
    char name[64];
    std::snprintf(name, sizeof name, "Qhat factorization (omega=%g)", omega);
    out.push_back({name, (qhat - formula).norm() / qn, 1e-12});
    std::snprintf(name, sizeof name, "Qhat = Q + T (omega=%g)", omega);
    out.push_back({name, (formula - qd - tsor).norm() / formula.norm(), 1e-12});
  }
  scb::IdentityReport rep = scb::identity_errors(q);
  out.push_back({"SCB product of V_j^*", rep.product_identity, 1e-11});
  out.push_back({"SCB Q + O_s factorization", rep.factorization, 1e-11});
  out.push_back({"SCB O_s = T_Q", rep.O_vs_T, 1e-11});
  out.push_back({"SCB O_j recursion", rep.recursion, 1e-11});
  out.push_back({"SCB Schur identity", rep.schur, 1e-11});
  return out;
}

double rel_diff(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

int cmd_verify(const std::string& path, bool corrupt) {
  Instance inst = load_instance(path);
  std::vector<Check> checks;
  if (inst.has_qp()) {
    CompositeQP prob = inst.problem();
    checks = operator_checks(prob.Q(), corrupt);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    Vec xb(prob.partition().total());
    for (Index i = 0; i < xb.size(); ++i) xb(i) = nd(rng);
    BlockVector xbar(prob.partition(), xb);
    CycleResult cr = sgs_cycle(prob, xbar);
    BlockVector ref = oracle::dense_subproblem_solve(prob, xbar, cr.Delta);
    checks.push_back({"sGS cycle = proximal subproblem", rel_diff(cr.x_plus.data(), ref.data()), 1e-9});
    if (prob.p().is_zero() && prob.shifts().empty()) {
      BlockVector se = scb::scb_eliminate(prob, xbar);
      CycleResult c0 = sgs_cycle(prob.with_b(prob.b()), xbar);
      checks.push_back({"SCB elimination = sGS cycle", rel_diff(se.data(), c0.x_plus.data()), 1e-10});
    }
  }
  if (inst.lincon) {
    auto more = operator_checks(penalized_operator(*inst.lincon, 1.0), corrupt);
    for (auto& c : more) c.name = "lincon " + c.name;
    checks.insert(checks.end(), more.begin(), more.end());
  }
  if (inst.qsdp) {
    const QsdpData& qd = *inst.qsdp;
    QsdpSubproblem sp = qsdp_assemble(qd, 1.0, Vec::Zero(qd.m()));
    auto more = operator_checks(sp.problem.Q(), corrupt);
    for (auto& c : more) c.name = "qsdp " + c.name;
    checks.insert(checks.end(), more.begin(), more.end());
    QsdpState st{Vec::Zero(qd.m()), Vec::Zero(qd.p()), Vec::Zero(qd.m())};
    QsdpState s1 = qsdp_sgs_step(qd, 1.0, st, Vec::Zero(qd.m()));
    CycleResult cr = sgs_cycle(sp.problem, qsdp_pack(sp, st));
    QsdpState s2 = qsdp_unpack(sp, cr.x_plus);
    Vec a(3 * qd.m() + qd.p()), b(3 * qd.m() + qd.p());
    a << s1.Z, s1.xi, s1.HW, Vec::Zero(qd.m());
    b << s2.Z, s2.xi, s2.HW, Vec::Zero(qd.m());
    checks.push_back({"qsdp steps 1a-1e = sGS cycle", rel_diff(a, b), 1e-10});
  }
  if (checks.empty()) throw Error(Errc::ParseError, "instance contains no problem");
  bool ok = true;
  for (const auto& c : checks) {
    std::printf("%-40s %-24s %-8g %s\n", c.name.c_str(), detail::csv_num(c.error).c_str(), c.threshold,
                c.ok() ? "ok" : "FAIL");
    ok &= c.ok();
  }
  if (!ok) {
    std::cerr << "error: " << to_string(Errc::IdentityViolation) << '\n';
    return 4;
  }
  return 0;
}

// ---- bench ----------------------------------------------------------------

struct BenchFlags {
  std::vector<std::string> instances;
  std::string omegas = "1,1.25,1.5";
  double kkt_tol = 1e-8;
  int max_iter = 5000;
  int jobs = 1;
  std::string out;
};

double observed_rate(const SolveTrace& tr) {
  const auto& rows = tr.rows;
  const std::size_t n = rows.size();
  if (n < 4) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t a = n / 2, b = n - 1;
  if (!(rows[a].kkt > 0.0) || !(rows[b].kkt > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::pow(rows[b].kkt / rows[a].kkt, 1.0 / static_cast<double>(b - a));
}

std::string bench_instance(const std::string& path, const BenchFlags& f) {
  Instance inst = load_instance(path);
  CompositeQP prob = inst.problem();
  std::ostringstream os;
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> omegas = parse_list(f.omegas);
  try {
    SsorRate sr = ssor_rate_constants(prob.Q());
    if (sr.omega_star >= 1.0 && sr.omega_star < 2.0) omegas.push_back(sr.omega_star);
  } catch (const Error&) {
  }
  auto predicted = [&](const Majorizer& maj) {
    try {
      return contraction_factor(maj);
    } catch (const Error&) {
      return nan;
    }
  };
  auto row = [&](const std::string& method, double omega, const SolveTrace& tr, double pred) {
    const double obs = observed_rate(tr);
    os << path << ',' << method << ',' << detail::csv_num(omega) << ',' << tr.rows.size() << ','
       << to_string(tr.termination) << ',' << detail::csv_num(obs) << ',' << detail::csv_num(pred) << ','
       << detail::csv_num(obs - pred) << '\n';
  };
  SolveOptions so;
  so.record_time = false;
  StopRule stop{f.kkt_tol, f.max_iter};
  BlockVector x0(prob.partition());
  const double bsgs = predicted(prob.majorizer());
  row("classical", 1.0, solve(prob, x0, StepSchedule::constant(), ToleranceSchedule::exact(), stop, {}, so).trace, bsgs);
  row("accelerated", 1.0, solve(prob, x0, StepSchedule::nesterov(), ToleranceSchedule::exact(), stop, {}, so).trace, nan);
  for (double w : omegas) {
    auto tr = solve(prob, x0, StepSchedule::constant(), ToleranceSchedule::exact(), stop, Variant::ssor(w), so).trace;
    row("ssor", w, tr, predicted(prob.ssor_majorizer(w)));
  }
  return os.str();
}

int cmd_bench(const BenchFlags& f) {
  std::vector<std::string> rows(f.instances.size());
  std::vector<std::string> errors(f.instances.size());
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= f.instances.size()) return;
        i = next++;
      }
      try {
        rows[i] = bench_instance(f.instances[i], f);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(f.jobs, static_cast<int>(f.instances.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) throw std::runtime_error(f.instances[i] + ": " + errors[i]);

  std::ofstream file;
  if (!f.out.empty()) {
    file.open(f.out, std::ios::binary);
    if (!file) throw Error(Errc::ParseError, "cannot open " + f.out);
  }
  std::ostream& os = f.out.empty() ? std::cout : file;
  os << "instance,method,omega,iterations,termination,observed_rate,predicted_rate,rate_gap\n";
  for (const auto& r : rows) os << r;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block symmetric Gauss-Seidel solver for convex composite QP"};
  app.require_subcommand(1);

  GenParams gp;
  std::string gen_dims = "2,2", gen_kind = "random", gen_out;
  auto* gen = app.add_subcommand("gen", "generate a seeded instance");
  gen->add_option("--kind", gen_kind, "random | laplace | lincon | qsdp");
  gen->add_option("--dims", gen_dims, "comma-separated block dimensions");
  gen->add_option("--kappa", gp.kappa, "target condition number of Q");
  gen->add_option("--density", gp.density, "probability of coupling between two blocks");
  gen->add_option("--prox", gp.prox, "zero | l1 | nonneg | box");
  gen->add_option("--seed", gp.seed);
  gen->add_flag("--singular", gp.singular, "PSD-singular Q with consistent b");
  gen->add_flag("--q11-identity", gp.q11_identity, "rescale so that Q_11 is a multiple of I");
  gen->add_option("--qsdp-n", gp.qsdp_n);
  gen->add_option("--qsdp-p", gp.qsdp_p);
  gen->add_option("--qsdp-rank", gp.qsdp_rank);
  gen->add_option("-o,--out", gen_out, "output path (default stdout)");

  SolveFlags sf;
  auto* sol = app.add_subcommand("solve", "run the proximal gradient method (or pALM for constrained instances)");
  sol->add_option("instance", sf.instance)->required();
  sol->add_option("--schedule", sf.schedule, "constant | nesterov | restart:P");
  sol->add_option("--mode", sf.mode, "exact | inexact:RTOL");
  sol->add_option("--variant", sf.variant, "sgs | ssor:OMEGA");
  sol->add_option("--eps0", sf.eps0);
  sol->add_option("--eps-power", sf.eps_power);
  sol->add_option("--kkt-tol", sf.kkt_tol);
  sol->add_option("--max-iter", sf.max_iter);
  sol->add_option("--trace", sf.trace, "CSV trace path");
  sol->add_option("--seed", sf.seed, "random starting point");
  sol->add_flag("--no-time", sf.no_time, "write zero wall times for reproducible traces");
  sol->add_option("--reuse", sf.reuse, "forward-sweep reuse constant c");
  sol->add_option("--sigma", sf.sigma, "pALM penalty");
  sol->add_option("--tau", sf.tau, "pALM step length in (0, 2)");
  sol->add_flag("--multiplier-uses-previous", sf.multiplier_previous, "pALM multiplier step with x^k");

  std::string verify_path;
  bool corrupt = false;
  auto* ver = app.add_subcommand("verify", "check operator identities and cycle exactness");
  ver->add_option("instance", verify_path)->required();
  ver->add_flag("--corrupt", corrupt)->group("");

  BenchFlags bf;
  auto* ben = app.add_subcommand("bench", "compare sGS, accelerated and sSOR runs");
  ben->add_option("instances", bf.instances);
  ben->add_option("--omegas", bf.omegas, "comma-separated omega grid");
  ben->add_option("--kkt-tol", bf.kkt_tol);
  ben->add_option("--max-iter", bf.max_iter);
  ben->add_option("--jobs", bf.jobs);
  ben->add_option("-o,--out", bf.out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      gp.kind = GenParams::parse_kind(gen_kind);
      gp.dims = parse_dims(gen_dims);
      Instance inst = generate(gp);
      if (gen_out.empty()) write_instance(std::cout, inst);
      else save_instance(gen_out, inst);
      return 0;
    }
    if (*sol) return cmd_solve(sf);
    if (*ver) return cmd_verify(verify_path, corrupt);
    if (*ben) return cmd_bench(bf);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
