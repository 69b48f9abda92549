#include "taskshift/error.hpp"

#include <algorithm>

#include "taskshift/types.hpp"

namespace taskshift {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ParameterOutOfRange: return "ParameterOutOfRange";
    case ErrorCode::DimensionOverflow: return "DimensionOverflow";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ZeroCoefficient: return "ZeroCoefficient";
    case ErrorCode::IndexNotInSupport: return "IndexNotInSupport";
    case ErrorCode::NoiseOutOfRange: return "NoiseOutOfRange";
    case ErrorCode::DegenerateLabel: return "DegenerateLabel";
    case ErrorCode::NoisyLabels: return "NoisyLabels";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DenseSignal: return "DenseSignal";
    case ErrorCode::DecompositionViolation: return "DecompositionViolation";
    case ErrorCode::BoundaryRegime: return "BoundaryRegime";
    case ErrorCode::UnsupportedRegime: return "UnsupportedRegime";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      detail_(message) {}

IndexSet& normalize(IndexSet& set) {
  std::sort(set.begin(), set.end());
  set.erase(std::unique(set.begin(), set.end()), set.end());
  return set;
}

}  // namespace taskshift
