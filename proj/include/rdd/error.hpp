#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rdd {

// Broad failure classes. The CLI maps these onto exit codes.
enum class Errc {
  invalid_argument,    // bad parameter values, violated preconditions
  invalid_data,        // malformed bundle contents (boundaries, frame counts, ...)
  dimension_mismatch,  // vectors / index / demo of incompatible dims
  out_of_range,        // frame or interval indices outside a demonstration
  infeasible,          // no exact cover under the length bounds
  io,                  // filesystem failures
  format,              // bad magic, version or truncated binary files
};

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::invalid_data: return "invalid_data";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::out_of_range: return "out_of_range";
    case Errc::infeasible: return "infeasible";
    case Errc::io: return "io";
    case Errc::format: return "format";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, Errc code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace rdd
