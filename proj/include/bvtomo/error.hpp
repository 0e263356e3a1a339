#pragma once

#include <stdexcept>
#include <string>

namespace bvtomo {

// Numeric values are part of the C ABI (see bvtomo.h); keep them in sync.
enum class ErrorCode : int {
  Ok = 0,
  InvalidArgument = 1,
  Parse = 2,
  Io = 3,
  Solver = 4,
  Incompatible = 5,
  Internal = 99,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

}  // namespace bvtomo
