#pragma once

// Plain-text instance files and a seeded generator.
//
// Layout (one section per bracketed header, numbers with 17 significant
// digits, "inf"/"-inf" for unbounded box entries):
//
//   [meta]       key value          (free-form generator record)
//   [partition]  dims n_1 ... n_s
//   [Q]          block i j r c      followed by r rows of c numbers (i <= j, 1-based)
//   [b]          b N                followed by one row
//   [prox]       kind zero|l1|nonneg|box|psd, weight w, side m, lo N / hi N rows
//   [shifts]     block i r c        followed by r rows
//   [lincon]     P r c, A r c, g N, d m
//   [qsdp]       n k, H r c, B r c, h p, C r c

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sgsqp/palm.hpp"

namespace sgsqp {

struct Instance {
  std::vector<std::pair<std::string, std::string>> meta;
  std::optional<BlockPartition> partition;
  std::optional<UpperBlocks> q;
  std::optional<Vec> b;
  ProxSpec prox;
  std::vector<Mat> shifts;  // empty or one per block
  std::optional<LinConQP> lincon;
  std::optional<QsdpData> qsdp;

  bool has_qp() const { return partition && q && b; }

  std::string meta_value(const std::string& key, const std::string& fallback = "") const {
    for (const auto& [k, v] : meta)
      if (k == key) return v;
    return fallback;
  }

  /// The CompositeQP; a nonsmooth p with Q_11 != mu I and no shifts gets the
  /// conservative block-1 shift.
  CompositeQP problem() const {
    if (!has_qp()) throw Error(Errc::ParseError, "instance has no [Q]/[b] sections");
    BlockSymOperator op = BlockSymOperator::assemble(*partition, *q);
    std::vector<Mat> js = shifts;
    if (js.empty() && !prox.is_zero() && !identity_multiple(op.diag(0))) js = conservative_shifts(op, {0});
    return CompositeQP(op, BlockVector(*partition, *b), prox, js);
  }
};

// ---- writing --------------------------------------------------------------

namespace detail {

inline std::string fmt_num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_row(std::ostream& os, const Eigen::Ref<const Vec>& v) {
  for (Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << fmt_num(v(i));
  os << '\n';
}

inline void write_mat(std::ostream& os, const std::string& head, const Mat& m) {
  os << head << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Index r = 0; r < m.rows(); ++r) write_row(os, m.row(r).transpose());
}

inline void write_vec(std::ostream& os, const std::string& key, const Vec& v) {
  os << key << ' ' << v.size() << '\n';
  write_row(os, v);
}

inline std::string prox_kind_name(ProxSpec::Kind k) {
  switch (k) {
    case ProxSpec::Kind::Zero: return "zero";
    case ProxSpec::Kind::L1: return "l1";
    case ProxSpec::Kind::NonnegOrthant: return "nonneg";
    case ProxSpec::Kind::Box: return "box";
    case ProxSpec::Kind::PsdCone: return "psd";
  }
  return "zero";
}

}  // namespace detail

inline void write_instance(std::ostream& os, const Instance& inst) {
  using detail::write_mat;
  using detail::write_vec;
  if (!inst.meta.empty()) {
    os << "[meta]\n";
    for (const auto& [k, v] : inst.meta) os << k << ' ' << v << '\n';
  }
  if (inst.partition) {
    os << "[partition]\ndims";
    for (Index d : inst.partition->dims()) os << ' ' << d;
    os << '\n';
  }
  if (inst.q) {
    os << "[Q]\n";
    const Index s = inst.q->blocks();
    for (Index i = 0; i < s; ++i)
      for (Index j = i; j < s; ++j) {
        const auto& blk = inst.q->at(i, j);
        if (blk) write_mat(os, "block " + std::to_string(i + 1) + ' ' + std::to_string(j + 1), *blk);
      }
  }
  if (inst.b) {
    os << "[b]\n";
    write_vec(os, "b", *inst.b);
  }
  os << "[prox]\nkind " << detail::prox_kind_name(inst.prox.kind) << '\n';
  if (inst.prox.kind == ProxSpec::Kind::L1) os << "weight " << detail::fmt_num(inst.prox.weight) << '\n';
  if (inst.prox.kind == ProxSpec::Kind::Box) {
    write_vec(os, "lo", inst.prox.lo);
    write_vec(os, "hi", inst.prox.hi);
  }
  if (inst.prox.kind == ProxSpec::Kind::PsdCone)
    os << "side " << inst.prox.side << "\nsvec " << (inst.prox.symmetric_vec ? 1 : 0) << '\n';
  if (!inst.shifts.empty()) {
    os << "[shifts]\n";
    for (std::size_t i = 0; i < inst.shifts.size(); ++i)
      if (!inst.shifts[i].isZero(0.0)) write_mat(os, "block " + std::to_string(i + 1), inst.shifts[i]);
  }
  if (inst.lincon) {
    os << "[lincon]\n";
    write_mat(os, "P", inst.lincon->P);
    write_mat(os, "A", inst.lincon->A);
    write_vec(os, "g", inst.lincon->g.data());
    write_vec(os, "d", inst.lincon->d);
  }
  if (inst.qsdp) {
    os << "[qsdp]\nn " << inst.qsdp->n << '\n';
    write_mat(os, "H", inst.qsdp->H);
    write_mat(os, "B", inst.qsdp->B);
    write_vec(os, "h", inst.qsdp->h);
    write_mat(os, "C", inst.qsdp->C);
  }
}

inline std::string to_text(const Instance& inst) {
  std::ostringstream os;
  write_instance(os, inst);
  return os.str();
}

inline void save_instance(const std::string& path, const Instance& inst) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::ParseError, "cannot open " + path + " for writing");
  write_instance(f, inst);
  if (!f) throw Error(Errc::ParseError, "failed writing " + path);
}

// ---- reading --------------------------------------------------------------

namespace detail {

class Reader {
 public:
  explicit Reader(std::istream& is) {
    std::string line;
    while (std::getline(is, line)) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto last = line.find_last_not_of(" \t\r");
      lines_.push_back(line.substr(first, last - first + 1));
    }
  }

  bool done() const { return pos_ >= lines_.size(); }
  const std::string& peek() const { return lines_[pos_]; }
  std::string next() {
    if (done()) throw Error(Errc::ParseError, "unexpected end of instance file");
    return lines_[pos_++];
  }
  std::size_t line_no() const { return pos_; }

  std::vector<double> numbers(std::size_t expect) {
    std::istringstream ls(next());
    std::vector<double> out;
    std::string tok;
    while (ls >> tok) out.push_back(parse_double(tok));
    if (out.size() != expect)
      throw Error(Errc::ParseError, "line " + std::to_string(pos_) + ": expected " + std::to_string(expect) + " numbers");
    return out;
  }

  Mat matrix(Index r, Index c) {
    if (r < 0 || c < 0) throw Error(Errc::ParseError, "negative matrix size");
    Mat m(r, c);
    for (Index i = 0; i < r; ++i) {
      auto row = numbers(static_cast<std::size_t>(c));
      for (Index j = 0; j < c; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
    }
    return m;
  }

  Vec vector(Index n) {
    auto row = numbers(static_cast<std::size_t>(n));
    return Eigen::Map<Vec>(row.data(), n);
  }

  static double parse_double(const std::string& tok) {
    if (tok == "inf") return kInf;
    if (tok == "-inf") return -kInf;
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw Error(Errc::ParseError, "bad number '" + tok + "'");
    return v;
  }

 private:
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
};

inline long parse_int(const std::string& tok) {
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0') throw Error(Errc::ParseError, "bad integer '" + tok + "'");
  return v;
}

inline std::vector<std::string> words(const std::string& s) {
  std::istringstream ls(s);
  std::vector<std::string> out;
  std::string w;
  while (ls >> w) out.push_back(w);
  return out;
}

inline void need(const std::vector<std::string>& w, std::size_t n, const std::string& what) {
  if (w.size() != n) throw Error(Errc::ParseError, "malformed '" + what + "' line");
}

}  // namespace detail

inline Instance read_instance(std::istream& is) {
  using detail::need;
  using detail::parse_int;
  detail::Reader rd(is);
  Instance inst;
  std::string section;
  std::vector<std::pair<Index, Index>> q_pending;
  Mat P, A;
  Vec g, d;
  bool have_lincon = false, have_qsdp = false;
  QsdpData qd;
  std::map<Index, Mat> shifts;
  Vec lo, hi;
  std::string prox_kind = "zero";
  double weight = 0.0;
  Index side = 0;
  bool svec_flag = true;

  std::vector<std::tuple<Index, Index, Mat>> qblocks;
  while (!rd.done()) {
    std::string line = rd.next();
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(Errc::ParseError, "bad section header '" + line + "'");
      section = line.substr(1, line.size() - 2);
      if (section == "lincon") have_lincon = true;
      if (section == "qsdp") have_qsdp = true;
      continue;
    }
    auto w = detail::words(line);
    const std::string& key = w[0];
    if (section == "meta") {
      const auto sp = line.find(' ');
      inst.meta.emplace_back(line.substr(0, sp), sp == std::string::npos ? "" : line.substr(sp + 1));
    } else if (section == "partition") {
      if (key != "dims" || w.size() < 2) throw Error(Errc::ParseError, "expected 'dims n_1 ... n_s'");
      std::vector<Index> dims;
      for (std::size_t i = 1; i < w.size(); ++i) dims.push_back(parse_int(w[i]));
      inst.partition = BlockPartition(dims);
    } else if (section == "Q") {
      need(w, 5, "block i j r c");
      const Index i = parse_int(w[1]) - 1, j = parse_int(w[2]) - 1;
      qblocks.emplace_back(i, j, rd.matrix(parse_int(w[3]), parse_int(w[4])));
    } else if (section == "b") {
      need(w, 2, "b N");
      inst.b = rd.vector(parse_int(w[1]));
    } else if (section == "prox") {
      if (key == "kind") {
        need(w, 2, "kind");
        prox_kind = w[1];
      } else if (key == "weight") {
        need(w, 2, "weight");
        weight = detail::Reader::parse_double(w[1]);
      } else if (key == "side") {
        need(w, 2, "side");
        side = parse_int(w[1]);
      } else if (key == "svec") {
        need(w, 2, "svec");
        svec_flag = parse_int(w[1]) != 0;
      } else if (key == "lo") {
        need(w, 2, "lo N");
        lo = rd.vector(parse_int(w[1]));
      } else if (key == "hi") {
        need(w, 2, "hi N");
        hi = rd.vector(parse_int(w[1]));
      } else {
        throw Error(Errc::ParseError, "unknown prox key '" + key + "'");
      }
    } else if (section == "shifts") {
      need(w, 4, "block i r c");
      shifts[parse_int(w[1]) - 1] = rd.matrix(parse_int(w[2]), parse_int(w[3]));
    } else if (section == "lincon") {
      if (key == "P" || key == "A") {
        need(w, 3, key + " r c");
        (key == "P" ? P : A) = rd.matrix(parse_int(w[1]), parse_int(w[2]));
      } else if (key == "g" || key == "d") {
        need(w, 2, key + " N");
        (key == "g" ? g : d) = rd.vector(parse_int(w[1]));
      } else {
        throw Error(Errc::ParseError, "unknown lincon key '" + key + "'");
      }
    } else if (section == "qsdp") {
      if (key == "n") {
        need(w, 2, "n");
        qd.n = parse_int(w[1]);
      } else if (key == "H" || key == "B" || key == "C") {
        need(w, 3, key + " r c");
        Mat m = rd.matrix(parse_int(w[1]), parse_int(w[2]));
        (key == "H" ? qd.H : key == "B" ? qd.B : qd.C) = std::move(m);
      } else if (key == "h") {
        need(w, 2, "h p");
        qd.h = rd.vector(parse_int(w[1]));
      } else {
        throw Error(Errc::ParseError, "unknown qsdp key '" + key + "'");
      }
    } else {
      throw Error(Errc::ParseError, "content outside a known section: '" + line + "'");
    }
  }

  if (prox_kind == "zero") inst.prox = ProxSpec::zero();
  else if (prox_kind == "l1") inst.prox = ProxSpec::l1(weight);
  else if (prox_kind == "nonneg") inst.prox = ProxSpec::nonneg();
  else if (prox_kind == "box") inst.prox = ProxSpec::box(lo, hi);
  else if (prox_kind == "psd") inst.prox = ProxSpec::psd_cone(side, svec_flag);
  else throw Error(Errc::ParseError, "unknown prox kind '" + prox_kind + "'");

  if (!qblocks.empty()) {
    if (!inst.partition) throw Error(Errc::ParseError, "[Q] requires [partition]");
    UpperBlocks ub(inst.partition->blocks());
    for (auto& [i, j, m] : qblocks) ub.set(i, j, std::move(m));
    inst.q = std::move(ub);
  }
  if (!shifts.empty()) {
    if (!inst.partition) throw Error(Errc::ParseError, "[shifts] requires [partition]");
    for (Index i = 0; i < inst.partition->blocks(); ++i) {
      auto it = shifts.find(i);
      const Index n = inst.partition->dim(i);
      inst.shifts.push_back(it == shifts.end() ? Mat(Mat::Zero(n, n)) : it->second);
    }
  }
  if (have_lincon) {
    if (!inst.partition) throw Error(Errc::ParseError, "[lincon] requires [partition]");
    LinConQP lp;
    lp.partition = *inst.partition;
    lp.P = P;
    lp.A = A;
    lp.g = BlockVector(lp.partition, g);
    lp.d = d;
    lp.p = inst.prox;
    lp.validate();
    inst.lincon = std::move(lp);
  }
  if (have_qsdp) {
    qd.validate();
    inst.qsdp = std::move(qd);
  }
  return inst;
}

inline Instance parse_instance(const std::string& text) {
  std::istringstream is(text);
  return read_instance(is);
}

inline Instance load_instance(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::ParseError, "cannot open " + path);
  return read_instance(f);
}

// ---- generator ------------------------------------------------------------

struct GenParams {
  enum class Kind { Random, Laplace, Lincon, Qsdp };

  Kind kind = Kind::Random;
  std::vector<Index> dims{2, 2};
  double kappa = 100.0;    // target condition number of Q (random kind)
  double density = 1.0;    // probability that an off-diagonal block pair is coupled
  std::string prox = "zero";  // zero | l1 | nonneg | box
  std::uint64_t seed = 0;
  bool singular = false;      // PSD-singular Q with PD diagonal blocks and consistent b
  bool q11_identity = false;  // rescale block 1 so that Q_11 = mu I
  Index qsdp_n = 3;           // QSDP matrix side
  Index qsdp_p = 2;           // QSDP number of linear constraints
  Index qsdp_rank = -1;       // rank of H (-1: full)

  static Kind parse_kind(const std::string& s) {
    if (s == "random") return Kind::Random;
    if (s == "laplace") return Kind::Laplace;
    if (s == "lincon") return Kind::Lincon;
    if (s == "qsdp") return Kind::Qsdp;
    throw Error(Errc::InvalidParams, "unknown instance kind '" + s + "'");
  }
  static std::string kind_name(Kind k) {
    switch (k) {
      case Kind::Random: return "random";
      case Kind::Laplace: return "laplace";
      case Kind::Lincon: return "lincon";
      case Kind::Qsdp: return "qsdp";
    }
    return "?";
  }
};

namespace detail {

class Gauss {
 public:
  explicit Gauss(std::uint64_t seed) : rng_(seed) {}
  double operator()() { return nd_(rng_); }
  double uniform() { return ud_(rng_); }
  Mat mat(Index r, Index c) {
    Mat m(r, c);
    for (Index j = 0; j < c; ++j)
      for (Index i = 0; i < r; ++i) m(i, j) = (*this)();
    return m;
  }
  Vec vec(Index n) { return mat(n, 1).col(0); }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> nd_{0.0, 1.0};
  std::uniform_real_distribution<double> ud_{0.0, 1.0};
};

inline Mat sym(const Mat& m) { return 0.5 * (m + m.transpose()); }

inline UpperBlocks split_upper(const BlockPartition& part, const Mat& q) {
  UpperBlocks ub(part.blocks());
  for (Index i = 0; i < part.blocks(); ++i)
    for (Index j = i; j < part.blocks(); ++j) {
      Mat b = q.block(part.offset(i), part.offset(j), part.dim(i), part.dim(j));
      if (i == j || !b.isZero(0.0)) ub.set(i, j, std::move(b));
    }
  return ub;
}

inline ProxSpec make_prox(const std::string& kind, Index n1, double scale) {
  if (kind == "zero") return ProxSpec::zero();
  if (kind == "l1") return ProxSpec::l1(0.1 * scale);
  if (kind == "nonneg") return ProxSpec::nonneg();
  if (kind == "box") return ProxSpec::box(Vec::Constant(n1, -1.0), Vec::Constant(n1, 1.0));
  throw Error(Errc::InvalidParams, "unknown prox kind '" + kind + "'");
}

}  // namespace detail

/// Seeded instance; identical parameters give byte-identical files.
inline Instance generate(const GenParams& gp) {
  for (Index d : gp.dims)
    if (d < 1) throw Error(Errc::InvalidParams, "block dimensions must be positive");
  if (gp.kind != GenParams::Kind::Qsdp && gp.dims.size() < 2) throw Error(Errc::InvalidParams, "at least two blocks are required");
  if (!(gp.kappa >= 1.0)) throw Error(Errc::InvalidParams, "kappa must be >= 1");
  if (!(gp.density >= 0.0 && gp.density <= 1.0)) throw Error(Errc::InvalidParams, "density must lie in [0, 1]");
  detail::Gauss rnd(gp.seed);
  Instance inst;
  inst.meta = {{"generator", GenParams::kind_name(gp.kind)}, {"seed", std::to_string(gp.seed)}};

  if (gp.kind == GenParams::Kind::Qsdp) {
    const Index n = gp.qsdp_n, p = gp.qsdp_p, m = svec_size(n);
    if (n < 1 || p < 1 || p > m) throw Error(Errc::InvalidParams, "QSDP needs n >= 1 and 1 <= p <= n(n+1)/2");
    const Index rank = gp.qsdp_rank < 0 ? m : std::min(gp.qsdp_rank, m);
    inst.meta.emplace_back("n", std::to_string(n));
    inst.meta.emplace_back("p", std::to_string(p));
    inst.meta.emplace_back("rank", std::to_string(rank));
    QsdpData qd;
    qd.n = n;
    Mat gh = rnd.mat(rank, m) / std::sqrt(static_cast<double>(m));
    qd.H = detail::sym(gh.transpose() * gh);
    qd.B = rnd.mat(p, m);
    qd.B.row(0) = svec(Mat::Identity(n, n)).transpose();
    Mat x0 = rnd.mat(n, n);
    x0 = x0 * x0.transpose() + Mat::Identity(n, n);
    qd.h = qd.B * svec(x0);
    Mat z0 = rnd.mat(n, n);
    z0 = z0 * z0.transpose() + Mat::Identity(n, n);
    Vec c = svec(z0) + qd.B.transpose() * rnd.vec(p) + qd.H * rnd.vec(m);
    qd.C = smat(c, n);
    inst.qsdp = qd;
    inst.prox = ProxSpec::psd_cone(n);
    return inst;
  }

  BlockPartition part(gp.dims);
  const Index s = part.blocks(), N = part.total();
  inst.meta.emplace_back("dims", [&] {
    std::string r;
    for (Index d : gp.dims) r += (r.empty() ? "" : ",") + std::to_string(d);
    return r;
  }());
  inst.meta.emplace_back("prox", gp.prox);
  inst.partition = part;

  if (gp.kind == GenParams::Kind::Lincon) {
    Index maxd = 0;
    for (Index d : gp.dims) maxd = std::max(maxd, d);
    const Index m = std::min(N - 1, std::max(maxd, N / 2));
    const Index r = N - m + 1;
    Mat gp_ = rnd.mat(r, N);
    LinConQP lp;
    lp.partition = part;
    lp.P = detail::sym(gp_.transpose() * gp_) / static_cast<double>(N);
    lp.A = rnd.mat(std::max<Index>(m, 1), N) / std::sqrt(static_cast<double>(N));
    Vec xf = rnd.vec(N);
    const Index n1 = part.dim(0);
    lp.p = detail::make_prox(gp.prox, n1, 1.0);
    if (lp.p.kind == ProxSpec::Kind::NonnegOrthant) xf.head(n1) = xf.head(n1).cwiseAbs();
    if (lp.p.kind == ProxSpec::Kind::Box) xf.head(n1) = xf.head(n1).cwiseMax(-0.9).cwiseMin(0.9);
    lp.d = lp.A * xf;
    lp.g = BlockVector(part, rnd.vec(N));
    inst.prox = lp.p;
    inst.meta.emplace_back("rows", std::to_string(lp.A.rows()));
    inst.lincon = std::move(lp);
    return inst;
  }

  Mat q;
  if (gp.kind == GenParams::Kind::Laplace) {
    const Index m = part.dim(0);
    for (Index d : gp.dims)
      if (d != m) throw Error(Errc::InvalidParams, "laplace instances need equal block dimensions");
    q = Mat::Zero(N, N);
    for (Index i = 0; i < N; ++i) {
      q(i, i) = 4.0;
      if (i % m != m - 1) q(i, i + 1) = q(i + 1, i) = -1.0;
      if (i + m < N) q(i, i + m) = q(i + m, i) = -1.0;
    }
  } else if (gp.singular) {
    // rank N - 1: a well-conditioned SPD matrix compressed off a spread-out
    // unit vector z; Q_ii stays PD since z is not supported on one block
    Mat gm = rnd.mat(N, N);
    Mat a = gm.transpose() * gm / static_cast<double>(N) + Mat::Identity(N, N);
    Vec z = rnd.vec(N).cwiseAbs() + Vec::Ones(N);
    z.normalize();
    Mat proj = Mat::Identity(N, N) - z * z.transpose();
    q = detail::sym(proj * a * proj);
  } else {
    q = Mat::Zero(N, N);
    for (Index i = 0; i < s; ++i) {
      Mat gi = rnd.mat(part.dim(i) + 1, part.dim(i));
      q.block(part.offset(i), part.offset(i), part.dim(i), part.dim(i)) += gi.transpose() * gi;
    }
    for (Index i = 0; i < s; ++i)
      for (Index j = i + 1; j < s; ++j) {
        if (rnd.uniform() >= gp.density) continue;
        const Index ni = part.dim(i), nj = part.dim(j);
        Mat gij = rnd.mat(ni + nj, ni + nj);
        Mat w = gij.transpose() * gij;
        auto add = [&](Index bi, Index oi, Index bj, Index oj, Index ri, Index rj) {
          q.block(part.offset(bi), part.offset(bj), part.dim(bi), part.dim(bj)) += w.block(oi, oj, ri, rj);
        };
        add(i, 0, i, 0, ni, ni);
        add(i, 0, j, ni, ni, nj);
        add(j, ni, i, 0, nj, ni);
        add(j, ni, j, ni, nj, nj);
      }
    q = detail::sym(q);
    Eigen::SelfAdjointEigenSolver<Mat> es(q, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0), lmax = es.eigenvalues()(N - 1);
    double mu = gp.kappa > 1.0 ? (lmax - gp.kappa * lmin) / (gp.kappa - 1.0) : 0.0;
    mu = std::max(mu, 0.0);
    q += mu * Mat::Identity(N, N);
    q /= lmax + mu;
  }
  if (gp.q11_identity) {
    // congruence with diag(Q_11^{-1/2}, I, ..., I) keeps the block structure
    const Index n1 = part.dim(0);
    Eigen::SelfAdjointEigenSolver<Mat> es(q.topLeftCorner(n1, n1));
    Mat s11 = es.operatorInverseSqrt();
    Mat t = Mat::Identity(N, N);
    t.topLeftCorner(n1, n1) = s11;
    q = detail::sym(t * q * t);
    q.topLeftCorner(n1, n1) = Mat::Identity(n1, n1);
  }
  Vec b = gp.singular ? Vec(q * rnd.vec(N)) : rnd.vec(N);
  inst.q = detail::split_upper(part, q);
  inst.b = b;
  inst.prox = detail::make_prox(gp.prox, part.dim(0), b.cwiseAbs().maxCoeff());
  if (!inst.prox.is_zero() && !gp.q11_identity) {
    BlockSymOperator op = BlockSymOperator::assemble(part, *inst.q);
    inst.shifts = conservative_shifts(op, {0});
  }
  return inst;
}

}  // namespace sgsqp
