#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sgsqp {

enum class Errc {
  DimensionMismatch,
  DiagonalNotPD,
  OmegaOutOfRange,
  ShiftNotPSD,
  NotPSD,
  NotPD,
  ShapeMismatch,
  NeedsShift,
  InnerSolverStall,
  FirstBlockMismatch,
  IdentityViolation,
  TauOutOfRange,
  RangeDeficiency,
  NotConverged,
  Infeasible,
  Unbounded,
  NotSymmetric,
  InvalidParams,
  ParseError,
  Stall,
};

inline std::string_view to_string(Errc e) {
  switch (e) {
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::DiagonalNotPD: return "DiagonalNotPD";
    case Errc::OmegaOutOfRange: return "OmegaOutOfRange";
    case Errc::ShiftNotPSD: return "ShiftNotPSD";
    case Errc::NotPSD: return "NotPSD";
    case Errc::NotPD: return "NotPD";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NeedsShift: return "NeedsShift";
    case Errc::InnerSolverStall: return "InnerSolverStall";
    case Errc::FirstBlockMismatch: return "FirstBlockMismatch";
    case Errc::IdentityViolation: return "IdentityViolation";
    case Errc::TauOutOfRange: return "TauOutOfRange";
    case Errc::RangeDeficiency: return "RangeDeficiency";
    case Errc::NotConverged: return "NotConverged";
    case Errc::Infeasible: return "Infeasible";
    case Errc::Unbounded: return "Unbounded";
    case Errc::NotSymmetric: return "NotSymmetric";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::ParseError: return "ParseError";
    case Errc::Stall: return "Stall";
  }
  return "Unknown";
}

/// Library exception. `block()` is the 1-based block index the error refers
/// to, or 0 when the error is not tied to a block.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, int block = 0)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), block_(block) {}

  Errc code() const noexcept { return code_; }
  int block() const noexcept { return block_; }

 private:
  Errc code_;
  int block_;
};

}  // namespace sgsqp
