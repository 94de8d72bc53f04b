#ifndef THREEC_ERROR_HPP
#define THREEC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace threec {

enum class ErrorCode {
  BadMagic,
  TruncatedFile,
  UnsupportedDtype,
  DimsOverflow,
  IoError,
  InvariantViolation,
  InvalidArgument,
  ConfigInfeasible,
  ConfigError,
  CapacityExceeded,
  LabelOutOfRange,
  ShapeMismatch,
  MissingDigit,
  MissingGroundTruth,
  EmptyTable,
  RhoZero,
};

const char* to_string(ErrorCode code);

// Every failure in the library surfaces as this exception; callers switch on
// code() when they need to distinguish cases.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace threec

#endif
