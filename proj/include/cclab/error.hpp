#pragma once

#include <stdexcept>
#include <string>

namespace cclab {

enum class ErrorKind {
  NonIrrational,
  OverlapError,
  CapExceeded,
  NonHyperbolic,
  DegenerateDenominator,
  StepUnderflow,
  InvalidParams,
  IllConditioned,
  DegreeMismatch,
  FeasibilityError,
  PatchResidual,
  GeometryError,
  ParseError,
};

inline const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::NonIrrational: return "NonIrrational";
    case ErrorKind::OverlapError: return "OverlapError";
    case ErrorKind::CapExceeded: return "CapExceeded";
    case ErrorKind::NonHyperbolic: return "NonHyperbolic";
    case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorKind::StepUnderflow: return "StepUnderflow";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::DegreeMismatch: return "DegreeMismatch";
    case ErrorKind::FeasibilityError: return "FeasibilityError";
    case ErrorKind::PatchResidual: return "PatchResidual";
    case ErrorKind::GeometryError: return "GeometryError";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind k, const std::string& msg)
      : std::runtime_error(std::string(kind_name(k)) + ": " + msg), kind_(k) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cclab
