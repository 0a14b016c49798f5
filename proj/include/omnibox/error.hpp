#pragma once

#include <stdexcept>
#include <string>

namespace omnibox {

enum class ErrorCode {
  kInvalidInput,
  kFormat,
  kIo,
};

// All library failures surface as Error; the C API maps code() onto obx_status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline Error InvalidInput(const std::string& message) {
  return Error(ErrorCode::kInvalidInput, message);
}
inline Error FormatError(const std::string& message) {
  return Error(ErrorCode::kFormat, message);
}
inline Error IoError(const std::string& message) {
  return Error(ErrorCode::kIo, message);
}

}  // namespace omnibox
