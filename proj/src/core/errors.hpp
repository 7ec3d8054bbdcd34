#pragma once

#include <stdexcept>
#include <string>

namespace dpage {

enum class ErrorCode {
  parse,
  validation,
  not_found,
  invalid_argument,
  illegal_operation,
  context_mismatch,
  io,
  corrupt_state,
  llm,
  runner,
  busy,
  state_mismatch,
};

const char* to_string(ErrorCode code);

// All engine failures surface as this type; `code()` drives the C API status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dpage
