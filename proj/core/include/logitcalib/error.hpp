#pragma once

#include <stdexcept>
#include <string>

namespace logitcalib {

enum class ErrorKind {
  kUsage,       // bad arguments or configuration
  kData,        // malformed or inconsistent input data
  kIo,          // file system failures
};

// All library failures are reported as Error; `kind` drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error DataError(const std::string& what) {
  return Error(ErrorKind::kData, what);
}
inline Error UsageError(const std::string& what) {
  return Error(ErrorKind::kUsage, what);
}
inline Error IoError(const std::string& what) {
  return Error(ErrorKind::kIo, what);
}

}  // namespace logitcalib
