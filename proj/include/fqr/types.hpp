#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace fqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Eigen::Index;

enum class ErrorCode {
  // data / input errors (CLI exit code 2)
  MissingSubject,
  OutOfRangeTime,
  NonFiniteValue,
  InvalidSize,
  InvalidConfig,
  FileFormat,
  GridMismatch,
  InsufficientPairs,
  // numerical errors (CLI exit code 3)
  NumericalFailure,
  AllZeroSpectrum,
  SingularConditioning,
  RankDeficientDesign,
  NoConvergence,
  NotInvertible,
  EigenvalueGapTooSmall,
  SingularContrastCovariance,
  SingularDesign,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

  bool is_data_error() const {
    switch (code_) {
      case ErrorCode::MissingSubject:
      case ErrorCode::OutOfRangeTime:
      case ErrorCode::NonFiniteValue:
      case ErrorCode::InvalidSize:
      case ErrorCode::InvalidConfig:
      case ErrorCode::FileFormat:
      case ErrorCode::GridMismatch:
      case ErrorCode::InsufficientPairs:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace fqr
