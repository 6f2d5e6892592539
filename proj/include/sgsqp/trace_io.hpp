#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include "sgsqp/palm.hpp"

namespace sgsqp {

namespace detail {
inline std::string csv_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

inline void write_trace_csv(std::ostream& os, const SolveTrace& tr) {
  using detail::csv_num;
  os << "k,F,kkt,delta_tilde,delta,t,beta,dist_qhat,time_s\n";
  for (const auto& r : tr.rows)
    os << r.k << ',' << csv_num(r.F) << ',' << csv_num(r.kkt) << ',' << csv_num(r.delta_tilde) << ','
       << csv_num(r.delta) << ',' << csv_num(r.t) << ',' << csv_num(r.beta) << ',' << csv_num(r.dist_qhat) << ','
       << csv_num(r.time_s) << '\n';
}

inline void write_palm_csv(std::ostream& os, const PalmResult& res) {
  using detail::csv_num;
  os << "k,F,primal_inf,kkt,y_norm,time_s\n";
  for (const auto& r : res.rows)
    os << r.k << ',' << csv_num(r.F) << ',' << csv_num(r.primal_inf) << ',' << csv_num(r.kkt) << ','
       << csv_num(r.y_norm) << ',' << csv_num(r.time_s) << '\n';
}

template <class T, class Writer>
void save_csv(const std::string& path, const T& data, Writer w) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::ParseError, "cannot open " + path + " for writing");
  w(f, data);
}

}  // namespace sgsqp
