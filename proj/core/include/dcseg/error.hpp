#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dcseg {

enum class ErrorKind {
  // grid
  ZeroImpedanceBranch,
  NoConvergence,
  SingularJacobian,
  // dynamics
  InfeasibleInit,
  EmptyRegion,
  // hvdc
  VoltageCollapse,
  DcOvervoltage,
  DcUndervoltage,
  // suppctrl
  MissingCoi,
  // simcore
  InitResidualTooLarge,
  StepNonConvergence,
  TargetNotFound,
  AlreadyOut,
  IslandedMachine,
  // smallsignal
  AlgebraicSolveFailed,
  ZeroEigenvalue,
  DefectiveMode,
  // poddesign
  ZeroGainStep,
  ModeMatchAmbiguous,
  ExcessivePhaseRequirement,
  ZeroSensitivity,
  // segmentation / io
  NotASeparator,
  RatingExceeded,
  InvalidInput,
};

std::string_view to_string(ErrorKind kind);

/// True for the numerical failure kinds (the CLI maps these to exit code 2).
bool is_convergence_failure(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace dcseg
