#pragma once

#include <stdexcept>
#include <string>

namespace catalyst {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kEmptyInput,
  kIo,
  kBadMagic,
  kTruncated,
  kInvalidValue,
  kDegenerate,
  kIncompatible,
};

// All library failures surface as this exception; the code lets callers
// branch without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace catalyst
