#pragma once

#include <stdexcept>
#include <string>

namespace psim {

// Mirrors psim_status in the C API; the numeric values are part of the ABI.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kConfig = 2,
  kIo = 3,
  kParse = 4,
  kNoJsonFound = 5,
  kMalformedJson = 6,
  kTransport = 7,
  kRateLimited = 8,
  kMalformedResponse = 9,
  kAuthMissing = 10,
  kReplayMiss = 11,
  kScriptExhausted = 12,
  kPersonaGenerationFailed = 13,
  kAbortThreshold = 14,
  kStatsDomain = 15,
  kDegenerate = 16,
  kInternal = 99,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // Backend failures that a caller may retry or absorb per conversation.
  bool is_backend_error() const noexcept {
    switch (code_) {
      case ErrorCode::kTransport:
      case ErrorCode::kRateLimited:
      case ErrorCode::kMalformedResponse:
      case ErrorCode::kAuthMissing:
      case ErrorCode::kScriptExhausted:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorCode code_;
};

}  // namespace psim
