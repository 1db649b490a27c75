#include "dcseg/error.hpp"

namespace dcseg {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ZeroImpedanceBranch: return "ZeroImpedanceBranch";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::InfeasibleInit: return "InfeasibleInit";
    case ErrorKind::EmptyRegion: return "EmptyRegion";
    case ErrorKind::VoltageCollapse: return "VoltageCollapse";
    case ErrorKind::DcOvervoltage: return "DcOvervoltage";
    case ErrorKind::DcUndervoltage: return "DcUndervoltage";
    case ErrorKind::MissingCoi: return "MissingCoi";
    case ErrorKind::InitResidualTooLarge: return "InitResidualTooLarge";
    case ErrorKind::StepNonConvergence: return "StepNonConvergence";
    case ErrorKind::TargetNotFound: return "TargetNotFound";
    case ErrorKind::AlreadyOut: return "AlreadyOut";
    case ErrorKind::IslandedMachine: return "IslandedMachine";
    case ErrorKind::AlgebraicSolveFailed: return "AlgebraicSolveFailed";
    case ErrorKind::ZeroEigenvalue: return "ZeroEigenvalue";
    case ErrorKind::DefectiveMode: return "DefectiveMode";
    case ErrorKind::ZeroGainStep: return "ZeroGainStep";
    case ErrorKind::ModeMatchAmbiguous: return "ModeMatchAmbiguous";
    case ErrorKind::ExcessivePhaseRequirement: return "ExcessivePhaseRequirement";
    case ErrorKind::ZeroSensitivity: return "ZeroSensitivity";
    case ErrorKind::NotASeparator: return "NotASeparator";
    case ErrorKind::RatingExceeded: return "RatingExceeded";
    case ErrorKind::InvalidInput: return "InvalidInput";
  }
  return "Unknown";
}

bool is_convergence_failure(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NoConvergence:
    case ErrorKind::SingularJacobian:
    case ErrorKind::InitResidualTooLarge:
    case ErrorKind::StepNonConvergence:
    case ErrorKind::AlgebraicSolveFailed:
    case ErrorKind::DcOvervoltage:
    case ErrorKind::DcUndervoltage:
    case ErrorKind::VoltageCollapse:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace dcseg
