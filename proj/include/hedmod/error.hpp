#pragma once

#include <stdexcept>
#include <string>

namespace hedmod {

/// Error kinds surface in the CLI as a stable machine-parsable prefix.
enum class ErrorKind {
  kInvalidArgument,
  kShapeMismatch,
  kParse,
  kIo,
  kNumeric,
  kVersion,
  kData,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace hedmod
