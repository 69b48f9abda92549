#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace taskshift {

enum class ErrorCode {
  ParameterOutOfRange,
  DimensionOverflow,
  IndexOutOfRange,
  ZeroCoefficient,
  IndexNotInSupport,
  NoiseOutOfRange,
  DegenerateLabel,
  NoisyLabels,
  SingularGram,
  EmptySupport,
  DimensionMismatch,
  DenseSignal,
  DecompositionViolation,
  BoundaryRegime,
  UnsupportedRegime,
  UnknownPreset,
  InvalidConfig,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (the sweep runner in particular) can report it without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  // Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace taskshift
