#include "psim/error.hpp"

namespace psim {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kNoJsonFound: return "no_json_found";
    case ErrorCode::kMalformedJson: return "malformed_json";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kRateLimited: return "rate_limited";
    case ErrorCode::kMalformedResponse: return "malformed_response";
    case ErrorCode::kAuthMissing: return "auth_missing";
    case ErrorCode::kReplayMiss: return "replay_miss";
    case ErrorCode::kScriptExhausted: return "script_exhausted";
    case ErrorCode::kPersonaGenerationFailed: return "persona_generation_failed";
    case ErrorCode::kAbortThreshold: return "abort_threshold";
    case ErrorCode::kStatsDomain: return "stats_domain";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

}  // namespace psim
