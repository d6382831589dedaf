#pragma once

#include <stdexcept>
#include <string>

namespace stitcher {

enum class ErrorCode {
  kParameter,
  kDomain,
  kConditioning,
  kRootFailure,
  kGridHeader,
  kGridPayload,
  kGridIo,
  kInvalidEndpoint,
  kNoGeometricPath,
  kGraphDisconnected,
  kInvalidStart,
  kStitch,
  kConfig,
};

const char* to_string(ErrorCode code);

// All recoverable failures in the library surface as this exception; callers
// branch on code() rather than on the message.
class StitcherError : public std::runtime_error {
 public:
  StitcherError(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stitcher
