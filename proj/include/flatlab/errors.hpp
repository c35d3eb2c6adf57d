#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace flatlab {

/**
 * Library-wide error type.  Every throw site supplies a stable machine
 * readable code (e.g. "MixedField", "TraceBudgetExceeded") plus a human
 * readable message; the CLI maps these to structured JSON on stderr.
 */
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool ok, const std::string& code, const std::string& message) {
  if (!ok) fail(code, message);
}

}  // namespace flatlab
