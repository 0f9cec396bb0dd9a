#include "hitlaw/error.hpp"

namespace hitlaw {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidAlphabet: return "InvalidAlphabet";
    case ErrorCode::NotSquare: return "NotSquare";
    case ErrorCode::ZeroRowOrColumn: return "ZeroRowOrColumn";
    case ErrorCode::NotProperSubset: return "NotProperSubset";
    case ErrorCode::UnknownSymbol: return "UnknownSymbol";
    case ErrorCode::NoAllowedWords: return "NoAllowedWords";
    case ErrorCode::LengthOverflow: return "LengthOverflow";
    case ErrorCode::NotPrimitive: return "NotPrimitive";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DisallowedWord: return "DisallowedWord";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::SubsystemNotMixing: return "SubsystemNotMixing";
    case ErrorCode::CombinatorialOverflow: return "CombinatorialOverflow";
    case ErrorCode::OrbitTooShort: return "OrbitTooShort";
    case ErrorCode::InvalidTestFunction: return "InvalidTestFunction";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::NonPositiveEstimate: return "NonPositiveEstimate";
    case ErrorCode::AlphabetMismatch: return "AlphabetMismatch";
    case ErrorCode::ProductTooLarge: return "ProductTooLarge";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigParse: return "ConfigParse";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace hitlaw
