#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hitlaw {

enum class ErrorCode {
  InvalidAlphabet,
  NotSquare,
  ZeroRowOrColumn,
  NotProperSubset,
  UnknownSymbol,
  NoAllowedWords,
  LengthOverflow,
  NotPrimitive,
  NoConvergence,
  DisallowedWord,
  NotNormalized,
  SubsystemNotMixing,
  CombinatorialOverflow,
  OrbitTooShort,
  InvalidTestFunction,
  QuadratureFailure,
  NonPositiveEstimate,
  AlphabetMismatch,
  ProductTooLarge,
  InvalidArgument,
  ConfigParse,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hitlaw
