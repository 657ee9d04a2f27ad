#include "fqr/types.hpp"

namespace fqr {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingSubject: return "MissingSubject";
    case ErrorCode::OutOfRangeTime: return "OutOfRangeTime";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::InvalidSize: return "InvalidSize";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::FileFormat: return "FileFormat";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::InsufficientPairs: return "InsufficientPairs";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::AllZeroSpectrum: return "AllZeroSpectrum";
    case ErrorCode::SingularConditioning: return "SingularConditioning";
    case ErrorCode::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotInvertible: return "NotInvertible";
    case ErrorCode::EigenvalueGapTooSmall: return "EigenvalueGapTooSmall";
    case ErrorCode::SingularContrastCovariance: return "SingularContrastCovariance";
    case ErrorCode::SingularDesign: return "SingularDesign";
  }
  return "UnknownError";
}

}  // namespace fqr
