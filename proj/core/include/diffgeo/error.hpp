#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace diffgeo {

enum class ErrorKind {
  InvalidArgument,
  DomainError,
  MismatchedGrids,
  StepSizeUnderflow,
  NonFiniteState,
  TangentialCrossing,
  ZeroTangent,
  EquilibriumPoint,
  NoConvergence,
  NoCycle,
  NotASaddle,
  BranchEscaped,
  LeftRegion,
  NoSignChange,
  Inconclusive,
  InvalidCone,
};

std::string_view to_string(ErrorKind kind);

/// All failures raised by the library. Analysis outcomes that are merely
/// negative (a cone that is not invariant, a cycle that cannot be certified)
/// are returned as values, not thrown.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace diffgeo
